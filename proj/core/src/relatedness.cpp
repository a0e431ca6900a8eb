#include "embeval/relatedness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "embeval/error.hpp"
#include "embeval/metrics.hpp"

namespace embeval {

Vector target_distribution(double y, ScoreRange range) {
  if (range.hi <= range.lo) throw ConfigError("score range must have hi > lo");
  if (!std::isfinite(y) || !range.contains(y)) {
    std::ostringstream os;
    os << "score " << y << " outside [" << range.lo << ", " << range.hi << "]";
    throw DataError(os.str());
  }
  Vector p(range.bins(), 0.0);
  const double fl = std::floor(y);
  const auto bin = static_cast<std::size_t>(fl - range.lo);
  if (fl == y) {
    p[bin] = 1.0;
  } else {
    p[bin] = fl - y + 1.0;
    p[bin + 1] = y - fl;
  }
  return p;
}

Matrix target_distributions(std::span<const double> scores, ScoreRange range) {
  Matrix out(scores.size(), range.bins());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const Vector p = target_distribution(scores[i], range);
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

std::vector<double> expected_scores(const Matrix& probabilities, ScoreRange range) {
  if (probabilities.cols() != range.bins()) {
    throw ShapeError("expected_scores: " + std::to_string(probabilities.cols()) +
                     " bins for a range with " + std::to_string(range.bins()));
  }
  std::vector<double> out(probabilities.rows(), 0.0);
  for (std::size_t i = 0; i < probabilities.rows(); ++i) {
    auto p = probabilities.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) s += static_cast<double>(range.lo + static_cast<int>(j)) * p[j];
    out[i] = s;
  }
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("kl_divergence: length mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return kl;
}

RelatednessFit RelatednessHead::fit(const ClassifierConfig& config, const Matrix& train_x,
                                    std::span<const double> train_scores, const Matrix& dev_x,
                                    std::span<const double> dev_scores) const {
  if (train_x.rows() != train_scores.size() || dev_x.rows() != dev_scores.size()) {
    throw ShapeError("relatedness: features and scores differ in length");
  }
  const Split train_set{train_x, Targets::distributions(target_distributions(train_scores, range_))};
  const Split dev_set{dev_x, Targets::distributions(target_distributions(dev_scores, range_))};
  const std::vector<double> dev_gold(dev_scores.begin(), dev_scores.end());
  const ScoreRange range = range_;
  DevScorer scorer = [&dev_gold, range](const Model& m, const Split& dev) {
    const auto pred = expected_scores(predict_proba(m, dev.x), range);
    // A collapsed head predicts one score everywhere; rank it below any real fit.
    if (std::all_of(pred.begin(), pred.end(), [&](double v) { return v == pred.front(); })) {
      return -2.0;
    }
    return pearson(pred, dev_gold);
  };
  GridSearchResult gs = grid_search_l2(config, train_set, dev_set, derive_seed(config.seed, 0), scorer);
  return {std::move(gs.best.model), gs.best_l2, gs.best_score, std::move(gs.best.report)};
}

std::vector<double> RelatednessHead::predict(const Model& model, const Matrix& x) const {
  return expected_scores(predict_proba(model, x), range_);
}

}  // namespace embeval
