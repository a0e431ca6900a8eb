#pragma once

// Direct-formula reference implementations, written independently of the
// library code (different algorithms where possible).

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double accuracy(const std::vector<int>& pred, const std::vector<int>& gold) {
  int hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

inline double f1(const std::vector<int>& pred, const std::vector<int>& gold, int pos) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == pos && gold[i] == pos) ++tp;
    if (pred[i] == pos && gold[i] != pos) ++fp;
    if (pred[i] != pos && gold[i] == pos) ++fn;
  }
  // F1 = 2TP / (2TP + FP + FN), which equals 2PR/(P+R) when defined.
  return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

/// Raw-sum formula: (n Sxy - Sx Sy) / sqrt((n Sxx - Sx^2)(n Syy - Sy^2)).
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

/// O(n^2) counting: rank = 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = 1 + less + (equal - 1) / 2;
  }
  return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

/// Sorts the row descending and reports the 1-based position of the first
/// entry equal to the correct candidate's score.
inline std::size_t rank_by_sorting(std::vector<double> row, std::size_t correct) {
  const double target = row[correct];
  std::sort(row.begin(), row.end(), std::greater<>());
  return static_cast<std::size_t>(std::find(row.begin(), row.end(), target) - row.begin()) + 1;
}

inline double recall(const std::vector<std::vector<double>>& sim, const std::vector<std::size_t>& correct,
                     std::size_t k) {
  double hits = 0;
  for (std::size_t q = 0; q < sim.size(); ++q) hits += rank_by_sorting(sim[q], correct[q]) <= k;
  return hits / static_cast<double>(sim.size());
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

}  // namespace oracle
