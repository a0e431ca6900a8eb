#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "embeval/classifier.hpp"
#include "embeval/matrix.hpp"

namespace embeval {

enum class SplitKind { nested_kfold, cv_train_fixed_test, fixed_split };

std::string_view to_string(SplitKind kind);

struct SplitSpec {
  SplitKind kind = SplitKind::nested_kfold;
  std::size_t k = 10;
  std::uint64_t seed = 1111;
};

/// Stratified partition of sample indices into k folds.
class FoldAssignment {
 public:
  FoldAssignment(std::size_t k, std::vector<std::size_t> fold_of);

  std::size_t k() const noexcept { return k_; }
  std::size_t size() const noexcept { return fold_of_.size(); }
  std::span<const std::size_t> fold_of() const noexcept { return fold_of_; }

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;

 private:
  std::size_t k_;
  std::vector<std::size_t> fold_of_;
};

/// Each class is shuffled with `seed` and dealt round-robin over the folds,
/// continuing from where the previous class stopped, so per-class and total
/// fold sizes both differ by at most one. Throws DataError when n < k.
FoldAssignment make_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed);

/// Stratified holdout: the last fold of a `parts`-fold assignment becomes dev.
struct Holdout {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
};
Holdout stratified_holdout(std::span<const int> labels, std::size_t parts, std::uint64_t seed);

struct LambdaSelection {
  double best_l2 = 0.0;
  double best_score = 0.0;           // mean inner-dev accuracy of best_l2
  std::vector<double> grid;          // ascending
  std::vector<double> mean_scores;   // aligned with grid
};

/// k-fold CV over `data` for every lambda in the grid; ties go to the
/// smallest lambda.
LambdaSelection select_l2_by_cv(const ClassifierConfig& config, const Split& data, std::size_t k,
                                std::uint64_t stream_seed);

/// Trains on `data` with a fixed lambda, using a stratified 90/10 split of it
/// for early stopping.
TrainOutcome train_with_holdout(const ClassifierConfig& config, double l2, const Split& data,
                                std::uint64_t stream_seed);

struct NestedCvResult {
  double mean_accuracy = 0.0;
  double mean_dev_accuracy = 0.0;
  std::vector<double> fold_accuracies;
  std::vector<double> fold_l2;
};

/// Outer k-fold for test estimates, inner k-fold on each outer-train portion
/// for lambda selection. `outer` fixes the outer partition when given.
NestedCvResult eval_nested_cv(const Matrix& x, std::span<const int> labels, std::size_t n_classes,
                              const ClassifierConfig& config, std::size_t k,
                              const FoldAssignment* outer = nullptr);

struct CvTestResult {
  double cv_accuracy = 0.0;  // mean CV dev accuracy of the selected lambda
  double test_accuracy = 0.0;
  double best_l2 = 0.0;
  std::vector<int> test_predictions;
};

/// Lambda chosen by k-fold CV on train; final model trained on all of train
/// (90/10 holdout for early stopping) and scored once on test.
CvTestResult eval_cv_train_fixed_test(const Matrix& train_x, std::span<const int> train_y,
                                      const Matrix& test_x, std::span<const int> test_y,
                                      std::size_t n_classes, const ClassifierConfig& config,
                                      std::size_t k);

struct FixedSplitResult {
  double dev_accuracy = 0.0;
  double test_accuracy = 0.0;
  double best_l2 = 0.0;
  std::vector<int> test_predictions;
};

FixedSplitResult eval_fixed_split(const Split& train_set, const Split& dev_set,
                                  const Split& test_set, const ClassifierConfig& config);

}  // namespace embeval
