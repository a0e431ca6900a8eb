#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embeval/encoders.hpp"
#include "embeval/protocols.hpp"
#include "embeval/relatedness.hpp"
#include "embeval/tokenize.hpp"

namespace embeval {

enum class TaskKind {
  classification,
  pair_classification,
  relatedness,
  sts_unsupervised,
  paraphrase,
  caption_retrieval,
};

std::string_view to_string(TaskKind kind);

struct TaskSpec {
  std::string name;
  TaskKind kind = TaskKind::classification;
  std::size_t n_classes = 0;          // classification-style tasks
  ScoreRange score_range;             // relatedness / STS
  SplitKind protocol = SplitKind::fixed_split;
  std::vector<std::string> splits;    // files required under <data_dir>/<name>/
  std::vector<std::string> label_names;  // accepted in place of integer ids
};

/// Every task the harness knows, in canonical order.
const std::vector<TaskSpec>& task_catalog();

/// Throws ConfigError listing the valid names when `name` is unknown.
const TaskSpec& find_task(std::string_view name);

std::vector<std::string> task_names();

struct Record {
  Tokens first;
  Tokens second;             // pair tasks only
  int label = -1;            // classification-style tasks
  double score = 0.0;        // relatedness / STS
  std::string image_id;      // caption retrieval
};

struct Subtask {
  std::string name;
  std::vector<Record> records;
};

/// Precomputed image features, all of one dimension (2048 by default).
struct ImageFeatureStore {
  VectorTable table;

  std::size_t dim() const noexcept { return table.dim; }
  bool contains(std::string_view id) const { return table.find(id).has_value(); }
};

struct TaskData {
  TaskSpec spec;
  std::map<std::string, std::vector<Record>> splits;
  std::vector<Subtask> subtasks;  // STS only, sorted by file name
  ImageFeatureStore images;       // COCO only

  /// Throws DataError when the split is missing.
  const std::vector<Record>& split(const std::string& name) const;
  bool has_split(const std::string& name) const { return splits.contains(name); }
};

struct LoadOptions {
  /// Treat text as already tokenized (split on whitespace only). A file named
  /// PRETOKENIZED in the task directory has the same effect.
  bool pretokenized = false;
  bool lowercase = false;
  std::size_t image_dim = 2048;
};

/// Loads `<data_dir>/<name>/{train,dev,test}.tsv` (plus `subtasks/*.tsv` for
/// STS and `features.vec` for COCO). Records keep file order. Errors name
/// the file and line.
TaskData load_task(std::string_view name, const std::filesystem::path& data_dir,
                   const LoadOptions& options = {});

/// Kind-specific checks: required splits present and nonempty, labels and
/// scores in range, pair fields present, image features available.
void validate_task(const TaskData& data);

/// Every sentence of the task (both sides of pairs), in file order.
std::vector<Tokens> task_sentences(const TaskData& data);

}  // namespace embeval
