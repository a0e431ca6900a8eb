#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "embeval/matrix.hpp"
#include "embeval/optim.hpp"
#include "embeval/random.hpp"

namespace embeval {

std::vector<double> default_l2_grid();

/// Settings of the classification head trained on frozen embeddings.
/// nhid == 0 selects logistic regression; dropout only applies to the MLP.
struct ClassifierConfig {
  std::size_t nhid = 0;
  OptimKind optim = OptimKind::adam;
  std::size_t batch_size = 64;
  int tenacity = 5;
  int epoch_size = 4;
  double dropout = 0.0;
  std::vector<double> l2_grid = default_l2_grid();
  double lr = 1e-3;
  int max_epochs = 200;
  std::uint64_t seed = 1111;
  /// Threads for independent (fold, lambda) jobs. Results do not depend on it.
  int workers = 1;

  static ClassifierConfig default_profile();
  static ClassifierConfig prototyping_profile();

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Training targets: either hard class ids or per-sample class distributions.
class Targets {
 public:
  Targets() = default;

  static Targets labels(std::vector<int> labels, std::size_t n_classes);
  static Targets distributions(Matrix distributions);

  std::size_t size() const noexcept;
  std::size_t n_classes() const noexcept { return n_classes_; }
  bool soft() const noexcept { return soft_; }

  std::span<const int> labels() const noexcept { return labels_; }
  const Matrix& distributions() const noexcept { return dist_; }

  Targets subset(std::span<const std::size_t> indices) const;

 private:
  bool soft_ = false;
  std::size_t n_classes_ = 0;
  std::vector<int> labels_;
  Matrix dist_;
};

struct Split {
  Matrix x;
  Targets y;

  std::size_t size() const noexcept { return x.rows(); }
  Split subset(std::span<const std::size_t> indices) const;
};

struct LogRegModel {
  Matrix w;  // classes x dim
  Vector b;  // classes
};

/// One hidden layer with logistic sigmoid activation.
struct MlpModel {
  Matrix w1;  // hidden x dim
  Vector b1;
  Matrix w2;  // classes x hidden
  Vector b2;
  double dropout = 0.0;
};

using Model = std::variant<LogRegModel, MlpModel>;

/// Parameter blocks in a fixed order (weights and biases interleaved as
/// declared). Used by the optimizer and by gradient checks.
std::vector<std::span<double>> parameter_blocks(Model& model);
std::vector<std::span<const double>> parameter_blocks(const Model& model);

/// True for blocks that carry the L2 penalty (weights, not biases).
std::vector<bool> regularized_blocks(const Model& model);

std::size_t input_dim(const Model& model);
std::size_t output_classes(const Model& model);

/// Zeros for logistic regression, uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
/// for both MLP layers.
Model init_model(std::size_t dim, std::size_t classes, const ClassifierConfig& config, Rng& rng);

struct LossAndGrads {
  double loss = 0.0;
  Model grads;
};

/// Mean cross-entropy (hard targets) or mean KL(target || predicted) (soft
/// targets) plus l2 * sum of squared weights. When dropout_rng is given and
/// the model is an MLP with dropout > 0, inverted dropout is applied to the
/// hidden layer.
LossAndGrads loss_and_grads(const Model& model, const Matrix& x, const Targets& y, double l2,
                            Rng* dropout_rng = nullptr);

Matrix predict_proba(const Model& model, const Matrix& x);
std::vector<int> predict_labels(const Model& model, const Matrix& x);

/// Unregularized validation error: 1 - accuracy (hard) or mean KL (soft).
double validation_error(const Model& model, const Split& split);

enum class StopReason { tenacity, max_epochs };
std::string_view to_string(StopReason reason);

struct TrainReport {
  double l2 = 0.0;
  /// Accuracy for hard targets, exp(-mean KL) for soft targets.
  double dev_score = 0.0;
  double dev_error = 0.0;
  int epochs_run = 0;
  StopReason stopped_by = StopReason::max_epochs;
  /// Validation error after each evaluation epoch.
  std::vector<double> dev_error_history;
};

struct TrainOutcome {
  Model model;
  TrainReport report;
};

/// Minibatch training with tenacity-based early stopping. One evaluation
/// epoch is config.epoch_size shuffled passes; the model with the lowest
/// validation error seen is returned. `stream_seed` drives init, shuffling
/// and dropout.
TrainOutcome train(const ClassifierConfig& config, double l2, const Split& train_set,
                   const Split& dev_set, std::uint64_t stream_seed);

/// Selection score for a trained model on the dev split; higher is better.
using DevScorer = std::function<double(const Model&, const Split&)>;

struct GridSearchResult {
  double best_l2 = 0.0;
  double best_score = 0.0;
  TrainOutcome best;
  std::vector<double> grid;    // ascending
  std::vector<double> scores;  // aligned with grid
};

/// Trains once per lambda and keeps the best dev score; ties go to the
/// smallest lambda. Without a scorer the train report's dev_score is used.
GridSearchResult grid_search_l2(const ClassifierConfig& config, const Split& train_set,
                                const Split& dev_set, std::uint64_t stream_seed,
                                const DevScorer& scorer = {});

/// <u, v, |u - v|, u * v>
Vector pair_features(std::span<const double> u, std::span<const double> v);
Matrix pair_features(const Matrix& u, const Matrix& v);

}  // namespace embeval
