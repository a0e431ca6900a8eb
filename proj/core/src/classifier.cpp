#include "embeval/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "embeval/error.hpp"
#include "embeval/parallel.hpp"

namespace embeval {

std::vector<double> default_l2_grid() { return {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}; }

ClassifierConfig ClassifierConfig::default_profile() {
  ClassifierConfig c;
  c.nhid = 0;
  c.optim = OptimKind::adam;
  c.batch_size = 64;
  c.tenacity = 5;
  c.epoch_size = 4;
  return c;
}

ClassifierConfig ClassifierConfig::prototyping_profile() {
  ClassifierConfig c;
  c.nhid = 0;
  c.optim = OptimKind::rmsprop;
  c.batch_size = 128;
  c.tenacity = 3;
  c.epoch_size = 2;
  return c;
}

void ClassifierConfig::validate() const {
  if (batch_size == 0) throw ConfigError("classifier batch_size must be > 0");
  if (tenacity <= 0) throw ConfigError("classifier tenacity must be > 0");
  if (epoch_size <= 0) throw ConfigError("classifier epoch_size must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("classifier dropout must be in [0, 1)");
  if (l2_grid.empty()) throw ConfigError("classifier l2_grid must not be empty");
  for (double l2 : l2_grid) {
    if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ConfigError("l2_grid entries must be finite and >= 0");
  }
  if (!(lr > 0.0)) throw ConfigError("classifier lr must be > 0");
  if (max_epochs <= 0) throw ConfigError("classifier max_epochs must be > 0");
}

// ---------------------------------------------------------------------------
// Targets

Targets Targets::labels(std::vector<int> labels, std::size_t n_classes) {
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
      throw DataError("label " + std::to_string(y) + " outside [0, " + std::to_string(n_classes) +
                      ")");
    }
  }
  Targets t;
  t.soft_ = false;
  t.n_classes_ = n_classes;
  t.labels_ = std::move(labels);
  return t;
}

Targets Targets::distributions(Matrix distributions) {
  Targets t;
  t.soft_ = true;
  t.n_classes_ = distributions.cols();
  t.dist_ = std::move(distributions);
  return t;
}

std::size_t Targets::size() const noexcept { return soft_ ? dist_.rows() : labels_.size(); }

Targets Targets::subset(std::span<const std::size_t> indices) const {
  Targets t;
  t.soft_ = soft_;
  t.n_classes_ = n_classes_;
  if (soft_) {
    t.dist_ = gather_rows(dist_, indices);
  } else {
    t.labels_.reserve(indices.size());
    for (std::size_t i : indices) t.labels_.push_back(labels_.at(i));
  }
  return t;
}

Split Split::subset(std::span<const std::size_t> indices) const {
  return Split{gather_rows(x, indices), y.subset(indices)};
}

// ---------------------------------------------------------------------------
// Models

std::vector<std::span<double>> parameter_blocks(Model& model) {
  return std::visit(
      [](auto& m) -> std::vector<std::span<double>> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogRegModel>) {
          return {m.w.values(), std::span<double>(m.b)};
        } else {
          return {m.w1.values(), std::span<double>(m.b1), m.w2.values(), std::span<double>(m.b2)};
        }
      },
      model);
}

std::vector<std::span<const double>> parameter_blocks(const Model& model) {
  auto blocks = parameter_blocks(const_cast<Model&>(model));
  return {blocks.begin(), blocks.end()};
}

std::vector<bool> regularized_blocks(const Model& model) {
  if (std::holds_alternative<LogRegModel>(model)) return {true, false};
  return {true, false, true, false};
}

std::size_t input_dim(const Model& model) {
  return std::visit(
      [](const auto& m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LogRegModel>) {
          return m.w.cols();
        } else {
          return m.w1.cols();
        }
      },
      model);
}

std::size_t output_classes(const Model& model) {
  return std::visit(
      [](const auto& m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LogRegModel>) {
          return m.w.rows();
        } else {
          return m.w2.rows();
        }
      },
      model);
}

Model init_model(std::size_t dim, std::size_t classes, const ClassifierConfig& config, Rng& rng) {
  if (config.nhid == 0) {
    return LogRegModel{Matrix(classes, dim), Vector(classes, 0.0)};
  }
  auto uniform_fill = [&rng](Matrix& m, Vector& b, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
    for (double& v : m.values()) v = rng.uniform(-bound, bound);
    for (double& v : b) v = rng.uniform(-bound, bound);
  };
  MlpModel mlp;
  mlp.w1 = Matrix(config.nhid, dim);
  mlp.b1 = Vector(config.nhid);
  mlp.w2 = Matrix(classes, config.nhid);
  mlp.b2 = Vector(classes);
  mlp.dropout = config.dropout;
  uniform_fill(mlp.w1, mlp.b1, dim);
  uniform_fill(mlp.w2, mlp.b2, config.nhid);
  return mlp;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Converts logits to probabilities in place and returns the summed data loss
// (cross-entropy or KL) over the batch. Leaves (p - target) / n in `delta`.
double softmax_loss(Matrix& logits, const Targets& y, Matrix& delta) {
  const std::size_t n = logits.rows();
  const std::size_t c = logits.cols();
  if (y.size() != n) {
    throw ShapeError("targets count " + std::to_string(y.size()) + " != batch rows " +
                     std::to_string(n));
  }
  if (y.n_classes() != c) {
    throw ShapeError("targets have " + std::to_string(y.n_classes()) + " classes, model has " +
                     std::to_string(c));
  }
  delta = Matrix(n, c);
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    auto d = delta.row(i);
    if (y.soft()) {
      auto t = y.distributions().row(i);
      for (std::size_t k = 0; k < c; ++k) {
        if (t[k] > 0.0) total += t[k] * (std::log(t[k]) - (row[k] - lse));
      }
      for (std::size_t k = 0; k < c; ++k) {
        row[k] = std::exp(row[k] - lse);
        d[k] = (row[k] - t[k]) * inv_n;
      }
    } else {
      const int label = y.labels()[i];
      total -= row[static_cast<std::size_t>(label)] - lse;
      for (std::size_t k = 0; k < c; ++k) {
        row[k] = std::exp(row[k] - lse);
        d[k] = row[k] * inv_n;
      }
      d[static_cast<std::size_t>(label)] -= inv_n;
    }
  }
  return total;
}

// grad += deltaᵀ · input ; bias_grad += column sums of delta
void accumulate_linear_grads(const Matrix& delta, const Matrix& input, Matrix& grad,
                             Vector& bias_grad) {
  for (std::size_t i = 0; i < delta.rows(); ++i) {
    auto d = delta.row(i);
    auto in = input.row(i);
    for (std::size_t k = 0; k < delta.cols(); ++k) {
      const double dk = d[k];
      if (dk == 0.0) continue;
      auto g = grad.row(k);
      for (std::size_t j = 0; j < in.size(); ++j) g[j] += dk * in[j];
      bias_grad[k] += dk;
    }
  }
}

void add_l2(const Matrix& w, double l2, Matrix& grad, double& loss) {
  if (l2 == 0.0) return;
  loss += l2 * squared_norm(w.values());
  auto g = grad.values();
  auto v = w.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * l2 * v[i];
}

LossAndGrads logreg_loss(const LogRegModel& m, const Matrix& x, const Targets& y, double l2) {
  Matrix logits = affine(x, m.w, m.b);
  Matrix delta;
  double loss = softmax_loss(logits, y, delta) / static_cast<double>(x.rows());
  LogRegModel g{Matrix(m.w.rows(), m.w.cols()), Vector(m.b.size(), 0.0)};
  accumulate_linear_grads(delta, x, g.w, g.b);
  add_l2(m.w, l2, g.w, loss);
  return {loss, std::move(g)};
}

LossAndGrads mlp_loss(const MlpModel& m, const Matrix& x, const Targets& y, double l2,
                      Rng* dropout_rng) {
  Matrix hidden = affine(x, m.w1, m.b1);
  for (double& v : hidden.values()) v = sigmoid(v);

  const bool use_dropout = dropout_rng != nullptr && m.dropout > 0.0;
  Matrix mask;
  Matrix dropped = hidden;
  if (use_dropout) {
    mask = Matrix(hidden.rows(), hidden.cols());
    const double keep_scale = 1.0 / (1.0 - m.dropout);
    auto mv = mask.values();
    auto dv = dropped.values();
    for (std::size_t i = 0; i < mv.size(); ++i) {
      mv[i] = dropout_rng->uniform() < m.dropout ? 0.0 : keep_scale;
      dv[i] *= mv[i];
    }
  }

  Matrix logits = affine(dropped, m.w2, m.b2);
  Matrix delta;
  double loss = softmax_loss(logits, y, delta) / static_cast<double>(x.rows());

  MlpModel g;
  g.w1 = Matrix(m.w1.rows(), m.w1.cols());
  g.b1 = Vector(m.b1.size(), 0.0);
  g.w2 = Matrix(m.w2.rows(), m.w2.cols());
  g.b2 = Vector(m.b2.size(), 0.0);
  g.dropout = m.dropout;
  accumulate_linear_grads(delta, dropped, g.w2, g.b2);

  // Back through the output layer, the dropout mask and the sigmoid.
  Matrix dz(hidden.rows(), hidden.cols());
  for (std::size_t i = 0; i < delta.rows(); ++i) {
    auto d = delta.row(i);
    auto out = dz.row(i);
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (d[k] == 0.0) continue;
      auto w2k = m.w2.row(k);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += d[k] * w2k[j];
    }
    auto h = hidden.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) {
      if (use_dropout) out[j] *= mask(i, j);
      out[j] *= h[j] * (1.0 - h[j]);
    }
  }
  accumulate_linear_grads(dz, x, g.w1, g.b1);
  add_l2(m.w1, l2, g.w1, loss);
  add_l2(m.w2, l2, g.w2, loss);
  return {loss, std::move(g)};
}

}  // namespace

LossAndGrads loss_and_grads(const Model& model, const Matrix& x, const Targets& y, double l2,
                            Rng* dropout_rng) {
  if (x.rows() == 0) throw TrainingError("loss_and_grads: empty batch");
  if (x.cols() != input_dim(model)) {
    throw ShapeError("loss_and_grads: input dim " + std::to_string(x.cols()) + " != model dim " +
                     std::to_string(input_dim(model)));
  }
  if (l2 < 0.0) throw ConfigError("l2 penalty must be >= 0");
  if (const auto* lr = std::get_if<LogRegModel>(&model)) return logreg_loss(*lr, x, y, l2);
  return mlp_loss(std::get<MlpModel>(model), x, y, l2, dropout_rng);
}

Matrix predict_proba(const Model& model, const Matrix& x) {
  if (const auto* lr = std::get_if<LogRegModel>(&model)) return affine_softmax(lr->w, lr->b, x);
  const auto& m = std::get<MlpModel>(model);
  Matrix hidden = affine(x, m.w1, m.b1);
  for (double& v : hidden.values()) v = sigmoid(v);
  return affine_softmax(m.w2, m.b2, hidden);
}

std::vector<int> predict_labels(const Model& model, const Matrix& x) {
  const Matrix p = predict_proba(model, x);
  std::vector<int> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    auto r = p.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

namespace {

Matrix logits_of(const Model& model, const Matrix& x) {
  return std::visit(
      [&](const auto& m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, LogRegModel>) {
          return affine(x, m.w, m.b);
        } else {
          Matrix hidden = affine(x, m.w1, m.b1);
          for (double& v : hidden.values()) v = sigmoid(v);
          return affine(hidden, m.w2, m.b2);
        }
      },
      model);
}

/// Mean unregularized cross-entropy or KL on the split.
double mean_dev_loss(const Model& model, const Split& split) {
  Matrix logits = logits_of(model, split.x);
  Matrix delta;
  return softmax_loss(logits, split.y, delta) / static_cast<double>(split.size());
}

}  // namespace

double validation_error(const Model& model, const Split& split) {
  if (split.size() == 0) throw TrainingError("validation split is empty");
  if (!split.y.soft()) {
    const auto pred = predict_labels(model, split.x);
    const auto gold = split.y.labels();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i] ? 1 : 0;
    return 1.0 - static_cast<double>(hits) / static_cast<double>(pred.size());
  }
  return mean_dev_loss(model, split);
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::tenacity ? "tenacity" : "max_epochs";
}

namespace {

void check_split_pair(const Split& train_set, const Split& dev_set) {
  if (train_set.size() == 0) throw TrainingError("training split is empty");
  if (dev_set.size() == 0) throw TrainingError("validation split is empty");
  if (train_set.y.size() != train_set.size() || dev_set.y.size() != dev_set.size()) {
    throw ShapeError("split features and targets differ in length");
  }
  if (train_set.x.cols() != dev_set.x.cols()) {
    throw ShapeError("train dim " + std::to_string(train_set.x.cols()) + " != dev dim " +
                     std::to_string(dev_set.x.cols()));
  }
  if (train_set.y.n_classes() != dev_set.y.n_classes() || train_set.y.soft() != dev_set.y.soft()) {
    throw ShapeError("train and dev targets are not of the same kind");
  }
}

std::string format_l2(double l2) {
  std::ostringstream os;
  os << l2;
  return os.str();
}

}  // namespace

TrainOutcome train(const ClassifierConfig& config, double l2, const Split& train_set,
                   const Split& dev_set, std::uint64_t stream_seed) {
  config.validate();
  check_split_pair(train_set, dev_set);

  Rng rng(stream_seed);
  Model model = init_model(train_set.x.cols(), train_set.y.n_classes(), config, rng);

  std::vector<std::size_t> sizes;
  for (auto block : parameter_blocks(model)) sizes.push_back(block.size());
  Optimizer optimizer(config.optim, config.lr, sizes);

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> batch;

  TrainReport report;
  report.l2 = l2;
  double best_error = std::numeric_limits<double>::infinity();
  double best_loss = std::numeric_limits<double>::infinity();
  Model best = model;
  int stale = 0;
  const bool dropout = config.nhid > 0 && config.dropout > 0.0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (int pass = 0; pass < config.epoch_size; ++pass) {
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t start = 0; start < n; start += config.batch_size) {
        const std::size_t stop = std::min(n, start + config.batch_size);
        batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(stop));
        const Split mb = train_set.subset(batch);
        LossAndGrads lg = loss_and_grads(model, mb.x, mb.y, l2, dropout ? &rng : nullptr);
        if (!std::isfinite(lg.loss)) {
          throw TrainingError("training diverged (non-finite loss) with l2=" + format_l2(l2));
        }
        auto params = parameter_blocks(model);
        auto grads = parameter_blocks(std::as_const(lg.grads));
        for (std::size_t b = 0; b < params.size(); ++b) optimizer.step(b, params[b], grads[b]);
      }
    }
    report.epochs_run = epoch;
    const double err = validation_error(model, dev_set);
    report.dev_error_history.push_back(err);
    // Accuracy moves in steps of 1/n on small dev sets; at equal accuracy a
    // lower dev loss still counts as progress.
    const double loss = dev_set.y.soft() ? err : mean_dev_loss(model, dev_set);
    if (err < best_error || (err == best_error && loss < best_loss)) {
      best_error = err;
      best_loss = loss;
      best = model;
      stale = 0;
    } else if (++stale >= config.tenacity) {
      report.stopped_by = StopReason::tenacity;
      break;
    }
  }

  report.dev_error = best_error;
  report.dev_score = dev_set.y.soft() ? std::exp(-best_error) : 1.0 - best_error;
  return {std::move(best), std::move(report)};
}

GridSearchResult grid_search_l2(const ClassifierConfig& config, const Split& train_set,
                                const Split& dev_set, std::uint64_t stream_seed,
                                const DevScorer& scorer) {
  config.validate();
  GridSearchResult result;
  result.grid = config.l2_grid;
  std::sort(result.grid.begin(), result.grid.end());

  std::vector<TrainOutcome> outcomes(result.grid.size());
  result.scores.assign(result.grid.size(), 0.0);
  parallel_for(result.grid.size(), config.workers, [&](std::size_t i) {
    outcomes[i] = train(config, result.grid[i], train_set, dev_set, derive_seed(stream_seed, i));
    result.scores[i] = scorer ? scorer(outcomes[i].model, dev_set) : outcomes[i].report.dev_score;
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.grid.size(); ++i) {
    if (result.scores[i] > result.scores[best]) best = i;
  }
  result.best_l2 = result.grid[best];
  result.best_score = result.scores[best];
  result.best = std::move(outcomes[best]);
  return result;
}

Vector pair_features(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ShapeError("pair_features: dims " + std::to_string(u.size()) + " and " +
                     std::to_string(v.size()));
  }
  const std::size_t d = u.size();
  Vector out(4 * d);
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = u[i];
    out[d + i] = v[i];
    out[2 * d + i] = std::abs(u[i] - v[i]);
    out[3 * d + i] = u[i] * v[i];
  }
  return out;
}

Matrix pair_features(const Matrix& u, const Matrix& v) {
  if (!u.same_shape(v)) throw ShapeError("pair_features: left and right embeddings differ in shape");
  Matrix out(u.rows(), 4 * u.cols());
  for (std::size_t r = 0; r < u.rows(); ++r) {
    const Vector f = pair_features(u.row(r), v.row(r));
    std::copy(f.begin(), f.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace embeval
