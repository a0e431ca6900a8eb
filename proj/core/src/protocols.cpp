#include "embeval/protocols.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "embeval/error.hpp"
#include "embeval/metrics.hpp"
#include "embeval/parallel.hpp"
#include "embeval/random.hpp"

namespace embeval {

std::string_view to_string(SplitKind kind) {
  switch (kind) {
    case SplitKind::nested_kfold:
      return "nested_kfold";
    case SplitKind::cv_train_fixed_test:
      return "cv_train_fixed_test";
    case SplitKind::fixed_split:
      return "fixed_split";
  }
  return "unknown";
}

FoldAssignment::FoldAssignment(std::size_t k, std::vector<std::size_t> fold_of)
    : k_(k), fold_of_(std::move(fold_of)) {
  for (std::size_t f : fold_of_) {
    if (f >= k_) throw ShapeError("fold id out of range");
  }
}

std::vector<std::size_t> FoldAssignment::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_.size(); ++i) {
    if (fold_of_[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_.size(); ++i) {
    if (fold_of_[i] != fold) out.push_back(i);
  }
  return out;
}

FoldAssignment make_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2, got " + std::to_string(k));
  if (labels.size() < k) {
    throw DataError("cannot split " + std::to_string(labels.size()) + " samples into " +
                    std::to_string(k) + " folds");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> fold_of(labels.size());
  std::size_t next = 0;
  for (auto& [label, members] : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t idx : members) {
      fold_of[idx] = next;
      next = (next + 1) % k;
    }
  }
  return FoldAssignment(k, std::move(fold_of));
}

Holdout stratified_holdout(std::span<const int> labels, std::size_t parts, std::uint64_t seed) {
  const FoldAssignment folds = make_folds(labels, parts, seed);
  return {folds.train_indices(parts - 1), folds.test_indices(parts - 1)};
}

namespace {

const std::vector<int>& labels_of(const Split& s, std::vector<int>& storage) {
  if (s.y.soft()) throw ConfigError("cross-validation requires hard class labels");
  storage.assign(s.y.labels().begin(), s.y.labels().end());
  return storage;
}

double test_accuracy(const Model& model, const Split& test_set) {
  const auto pred = predict_labels(model, test_set.x);
  return accuracy(pred, test_set.y.labels());
}

}  // namespace

LambdaSelection select_l2_by_cv(const ClassifierConfig& config, const Split& data, std::size_t k,
                                std::uint64_t stream_seed) {
  config.validate();
  std::vector<int> labels;
  labels_of(data, labels);
  const FoldAssignment folds = make_folds(labels, k, derive_seed(stream_seed, 0, 0));

  LambdaSelection sel;
  sel.grid = config.l2_grid;
  std::sort(sel.grid.begin(), sel.grid.end());
  const std::size_t g = sel.grid.size();

  std::vector<Split> fold_train(k), fold_dev(k);
  for (std::size_t f = 0; f < k; ++f) {
    fold_train[f] = data.subset(folds.train_indices(f));
    fold_dev[f] = data.subset(folds.test_indices(f));
  }

  ClassifierConfig cell_config = config;
  cell_config.workers = 1;
  std::vector<double> cell_scores(k * g, 0.0);
  parallel_for(k * g, config.workers, [&](std::size_t cell) {
    const std::size_t f = cell / g;
    const std::size_t li = cell % g;
    const TrainOutcome out = train(cell_config, sel.grid[li], fold_train[f], fold_dev[f],
                                   derive_seed(stream_seed, f + 1, li));
    cell_scores[cell] = out.report.dev_score;
  });

  sel.mean_scores.assign(g, 0.0);
  for (std::size_t li = 0; li < g; ++li) {
    double sum = 0.0;
    for (std::size_t f = 0; f < k; ++f) sum += cell_scores[f * g + li];
    sel.mean_scores[li] = sum / static_cast<double>(k);
  }
  std::size_t best = 0;
  for (std::size_t li = 1; li < g; ++li) {
    if (sel.mean_scores[li] > sel.mean_scores[best]) best = li;
  }
  sel.best_l2 = sel.grid[best];
  sel.best_score = sel.mean_scores[best];
  return sel;
}

TrainOutcome train_with_holdout(const ClassifierConfig& config, double l2, const Split& data,
                                std::uint64_t stream_seed) {
  std::vector<int> labels;
  labels_of(data, labels);
  const Holdout h = stratified_holdout(labels, 10, derive_seed(stream_seed, 0, 1));
  return train(config, l2, data.subset(h.train), data.subset(h.dev), derive_seed(stream_seed, 0, 2));
}

NestedCvResult eval_nested_cv(const Matrix& x, std::span<const int> labels, std::size_t n_classes,
                              const ClassifierConfig& config, std::size_t k,
                              const FoldAssignment* outer) {
  config.validate();
  if (x.rows() != labels.size()) throw ShapeError("nested CV: features and labels differ in length");
  const Split all{x, Targets::labels({labels.begin(), labels.end()}, n_classes)};
  const FoldAssignment folds = outer != nullptr ? *outer : make_folds(labels, k, config.seed);
  if (folds.size() != labels.size()) throw ShapeError("outer fold assignment does not match data");

  NestedCvResult result;
  result.fold_accuracies.assign(folds.k(), 0.0);
  result.fold_l2.assign(folds.k(), 0.0);
  std::vector<double> dev_scores(folds.k(), 0.0);

  ClassifierConfig inner = config;
  inner.workers = 1;
  parallel_for(folds.k(), config.workers, [&](std::size_t f) {
    const std::uint64_t stream = derive_seed(config.seed, f + 1);
    const Split outer_train = all.subset(folds.train_indices(f));
    const Split outer_test = all.subset(folds.test_indices(f));
    const LambdaSelection sel = select_l2_by_cv(inner, outer_train, k, stream);
    const TrainOutcome final_model = train_with_holdout(inner, sel.best_l2, outer_train, stream);
    result.fold_accuracies[f] = test_accuracy(final_model.model, outer_test);
    result.fold_l2[f] = sel.best_l2;
    dev_scores[f] = sel.best_score;
  });

  const double kk = static_cast<double>(folds.k());
  result.mean_accuracy =
      std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) / kk;
  result.mean_dev_accuracy = std::accumulate(dev_scores.begin(), dev_scores.end(), 0.0) / kk;
  return result;
}

CvTestResult eval_cv_train_fixed_test(const Matrix& train_x, std::span<const int> train_y,
                                      const Matrix& test_x, std::span<const int> test_y,
                                      std::size_t n_classes, const ClassifierConfig& config,
                                      std::size_t k) {
  config.validate();
  if (train_x.rows() == 0 || test_x.rows() == 0) throw TrainingError("train and test must be nonempty");
  const Split train_set{train_x, Targets::labels({train_y.begin(), train_y.end()}, n_classes)};
  const Split test_set{test_x, Targets::labels({test_y.begin(), test_y.end()}, n_classes)};
  if (train_set.size() != train_set.y.size() || test_set.size() != test_set.y.size()) {
    throw ShapeError("features and labels differ in length");
  }

  const std::uint64_t stream = derive_seed(config.seed, 0);
  const LambdaSelection sel = select_l2_by_cv(config, train_set, k, stream);
  const TrainOutcome final_model = train_with_holdout(config, sel.best_l2, train_set, stream);

  CvTestResult r;
  r.cv_accuracy = sel.best_score;
  r.best_l2 = sel.best_l2;
  r.test_predictions = predict_labels(final_model.model, test_set.x);
  r.test_accuracy = accuracy(r.test_predictions, test_set.y.labels());
  return r;
}

FixedSplitResult eval_fixed_split(const Split& train_set, const Split& dev_set,
                                  const Split& test_set, const ClassifierConfig& config) {
  if (test_set.size() == 0) throw TrainingError("test split is empty");
  const GridSearchResult gs = grid_search_l2(config, train_set, dev_set, derive_seed(config.seed, 0));
  FixedSplitResult r;
  r.dev_accuracy = gs.best_score;
  r.best_l2 = gs.best_l2;
  r.test_predictions = predict_labels(gs.best.model, test_set.x);
  r.test_accuracy = accuracy(r.test_predictions, test_set.y.labels());
  return r;
}

}  // namespace embeval
