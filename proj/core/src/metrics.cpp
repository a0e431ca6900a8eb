#include "embeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "embeval/error.hpp"

namespace embeval {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* who) {
  if (a == 0 || b == 0) throw MetricError(std::string(who) + ": empty input");
  if (a != b) {
    throw ShapeError(std::string(who) + ": length mismatch " + std::to_string(a) + " vs " +
                      std::to_string(b));
  }
}

}  // namespace

double accuracy(std::span<const int> pred, std::span<const int> gold) {
  check_lengths(pred.size(), gold.size(), "accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double f1_binary(std::span<const int> pred, std::span<const int> gold, int positive_class) {
  check_lengths(pred.size(), gold.size(), "f1_binary");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == positive_class;
    const bool g = gold[i] == positive_class;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size(), "pearson");
  if (x.size() < 2) throw MetricError("pearson: need at least 2 samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw MetricError("correlation undefined: constant input");
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // Positions i..j-1 (0-based) share rank mean(i+1..j).
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size(), "spearman");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

CorrelationPair correlations(std::span<const double> x, std::span<const double> y) {
  return {pearson(x, y), spearman(x, y)};
}

std::size_t rank_of(std::span<const double> scores, std::size_t correct) {
  if (correct >= scores.size()) throw MetricError("rank_of: correct index out of range");
  const double target = scores[correct];
  std::size_t higher = 0;
  for (double s : scores) higher += s > target ? 1 : 0;
  return higher + 1;
}

std::size_t best_rank_of(std::span<const double> scores, std::span<const std::size_t> correct) {
  if (correct.empty()) throw MetricError("best_rank_of: no correct candidates");
  std::size_t best = scores.size() + 1;
  for (std::size_t c : correct) best = std::min(best, rank_of(scores, c));
  return best;
}

double recall_from_ranks(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) throw MetricError("recall: empty input");
  if (k == 0) throw MetricError("recall: K must be >= 1");
  std::size_t hits = 0;
  for (std::size_t r : ranks) hits += r <= k ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double recall_at_k(const Matrix& similarity, std::span<const std::size_t> correct, std::size_t k) {
  if (similarity.rows() == 0) throw MetricError("recall_at_k: no queries");
  if (correct.size() != similarity.rows()) {
    throw MetricError("recall_at_k: " + std::to_string(correct.size()) + " answers for " +
                      std::to_string(similarity.rows()) + " queries");
  }
  if (k == 0) throw MetricError("recall_at_k: K must be >= 1");
  if (k > similarity.cols()) {
    throw MetricError("recall_at_k: K=" + std::to_string(k) + " exceeds " +
                      std::to_string(similarity.cols()) + " candidates");
  }
  std::vector<std::size_t> ranks(similarity.rows());
  for (std::size_t q = 0; q < similarity.rows(); ++q) ranks[q] = rank_of(similarity.row(q), correct[q]);
  return recall_from_ranks(ranks, k);
}

double median_rank(std::span<const double> ranks) {
  if (ranks.empty()) throw MetricError("median_rank: empty input");
  std::vector<double> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double median_rank(std::span<const std::size_t> ranks) {
  std::vector<double> r(ranks.begin(), ranks.end());
  return median_rank(std::span<const double>(r));
}

StsAggregate sts_aggregate(std::vector<SubtaskCorrelation> subtasks) {
  if (subtasks.empty()) throw MetricError("sts_aggregate: no subtasks");
  StsAggregate agg;
  double total = 0.0;
  for (const auto& s : subtasks) total += static_cast<double>(s.count);
  if (total <= 0.0) throw MetricError("sts_aggregate: subtasks have no samples");
  const double k = static_cast<double>(subtasks.size());
  for (const auto& s : subtasks) {
    agg.mean.pearson += s.corr.pearson / k;
    agg.mean.spearman += s.corr.spearman / k;
    const double w = static_cast<double>(s.count) / total;
    agg.weighted_mean.pearson += w * s.corr.pearson;
    agg.weighted_mean.spearman += w * s.corr.spearman;
  }
  agg.subtasks = std::move(subtasks);
  return agg;
}

}  // namespace embeval
