#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "embeval/classifier.hpp"
#include "embeval/encoders.hpp"
#include "embeval/ingest.hpp"
#include "embeval/metrics.hpp"
#include "embeval/retrieval.hpp"

namespace embeval {

struct TaskRunOptions {
  ClassifierConfig classifier = ClassifierConfig::default_profile();
  std::size_t kfold = 10;
  std::size_t encoder_batch_size = 128;
  RetrievalConfig retrieval;
};

/// Accuracy-style outcome (classification, NLI, paraphrase).
struct ClassificationResult {
  double dev_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::optional<double> f1;            // paraphrase only
  std::vector<double> fold_accuracies; // nested CV only
  std::vector<double> fold_l2;         // nested CV only
  double best_l2 = 0.0;                // non-nested protocols
  std::size_t n_train = 0;
  std::size_t n_dev = 0;
  std::size_t n_test = 0;
};

struct RelatednessResult {
  double pearson = 0.0;
  double spearman = 0.0;
  double mse = 0.0;
  double dev_pearson = 0.0;
  double best_l2 = 0.0;
  std::size_t n_train = 0;
  std::size_t n_dev = 0;
  std::size_t n_test = 0;
};

struct RetrievalResult {
  std::vector<RetrievalScores> splits;
  RetrievalScores mean;
  double dev_score = 0.0;
  int epochs_run = 0;
};

using EvalPayload = std::variant<ClassificationResult, RelatednessResult, StsAggregate, RetrievalResult>;

struct EvalResult {
  std::string task;
  TaskKind kind = TaskKind::classification;
  EvalPayload payload;
};

EvalResult run_classification(const TaskData& data, Encoder& encoder, const TaskRunOptions& options);

/// NLI (fixed split) and paraphrase (CV on train, fixed test, plus F1) on
/// <u, v, |u-v|, u*v> features.
EvalResult run_pair_classification(const TaskData& data, Encoder& encoder,
                                   const TaskRunOptions& options);

/// Score-distribution head; Pearson, Spearman and MSE of the expected score
/// on test.
EvalResult run_relatedness(const TaskData& data, Encoder& encoder, const TaskRunOptions& options);

/// Cosine of the two sentence embeddings per pair against gold, per subtask,
/// aggregated. No training. Throws MetricError naming the sentence when an
/// embedding is all zeros.
StsAggregate run_sts_unsupervised(const TaskData& data, Encoder& encoder,
                                  std::size_t encoder_batch_size = 128);

/// Same computation from precomputed embeddings (one left/right matrix and
/// gold vector per subtask).
struct StsSubtaskEmbeddings {
  std::string name;
  Matrix left;
  Matrix right;
  std::vector<double> gold;
};
StsAggregate sts_from_embeddings(std::span<const StsSubtaskEmbeddings> subtasks);

EvalResult run_caption_retrieval(const TaskData& data, Encoder& encoder, const TaskRunOptions& options);

/// Dispatches on task kind; the encoder must already be prepared.
EvalResult run_prepared_task(const TaskData& data, Encoder& encoder, const TaskRunOptions& options);

/// Calls encoder.prepare with the task's sentences, then run_prepared_task.
EvalResult run_task(const TaskData& data, Encoder& encoder, const TaskRunOptions& options);

}  // namespace embeval
