#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "embeval/matrix.hpp"

namespace embeval {

double accuracy(std::span<const int> pred, std::span<const int> gold);

/// F1 of `positive_class`; 0 when precision + recall is 0.
double f1_binary(std::span<const int> pred, std::span<const int> gold, int positive_class = 1);

/// Sample Pearson correlation. Throws MetricError when n < 2 or either
/// input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks, tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

double spearman(std::span<const double> x, std::span<const double> y);

struct CorrelationPair {
  double pearson = 0.0;
  double spearman = 0.0;
};

CorrelationPair correlations(std::span<const double> x, std::span<const double> y);

/// 1 + number of candidates scoring strictly higher than `correct`.
std::size_t rank_of(std::span<const double> scores, std::size_t correct);

/// Best (smallest) rank among several correct candidates.
std::size_t best_rank_of(std::span<const double> scores, std::span<const std::size_t> correct);

/// Fraction of ranks <= k.
double recall_from_ranks(std::span<const std::size_t> ranks, std::size_t k);

/// Recall@K over a queries x candidates similarity matrix. Throws MetricError
/// when k is 0 or exceeds the number of candidates.
double recall_at_k(const Matrix& similarity, std::span<const std::size_t> correct, std::size_t k);

/// Middle element, or mean of the two middle elements for even n.
double median_rank(std::span<const double> ranks);
double median_rank(std::span<const std::size_t> ranks);

struct SubtaskCorrelation {
  std::string name;
  std::size_t count = 0;
  CorrelationPair corr;
};

struct StsAggregate {
  std::vector<SubtaskCorrelation> subtasks;
  CorrelationPair mean;
  CorrelationPair weighted_mean;  // weights n_i / sum(n)
};

StsAggregate sts_aggregate(std::vector<SubtaskCorrelation> subtasks);

}  // namespace embeval
