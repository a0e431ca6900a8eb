#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "embeval/classifier.hpp"
#include "embeval/matrix.hpp"

namespace embeval {

/// Integer score grid [lo, hi]; one classifier bin per integer.
struct ScoreRange {
  int lo = 0;
  int hi = 5;

  std::size_t bins() const noexcept { return static_cast<std::size_t>(hi - lo + 1); }
  bool contains(double y) const noexcept { return y >= lo && y <= hi; }
};

/// Two-bin distribution whose expectation over the integer grid equals y:
/// mass (y - floor y) on floor(y) + 1 and (floor y - y + 1) on floor(y).
/// Throws DataError when y lies outside the range.
Vector target_distribution(double y, ScoreRange range);

Matrix target_distributions(std::span<const double> scores, ScoreRange range);

/// Expected score sum_j r_j p_j for each row of bin probabilities.
std::vector<double> expected_scores(const Matrix& probabilities, ScoreRange range);

/// KL(p || q) = sum p_j (log p_j - log q_j), with 0 log 0 = 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

struct RelatednessFit {
  Model model;
  double best_l2 = 0.0;
  double dev_pearson = 0.0;
  TrainReport report;
};

/// Classifier over score bins trained with KL loss against soft targets.
/// Lambda is selected by dev Pearson of the expected score; early stopping
/// uses dev KL.
class RelatednessHead {
 public:
  explicit RelatednessHead(ScoreRange range) : range_(range) {}

  ScoreRange range() const noexcept { return range_; }

  RelatednessFit fit(const ClassifierConfig& config, const Matrix& train_x,
                     std::span<const double> train_scores, const Matrix& dev_x,
                     std::span<const double> dev_scores) const;

  std::vector<double> predict(const Model& model, const Matrix& x) const;

 private:
  ScoreRange range_;
};

}  // namespace embeval
