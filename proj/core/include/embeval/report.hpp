#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "embeval/classifier.hpp"
#include "embeval/encoders.hpp"
#include "embeval/ingest.hpp"
#include "embeval/retrieval.hpp"
#include "embeval/tasks.hpp"

namespace embeval {

inline constexpr std::string_view kHarnessVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

enum class Profile { standard, prototyping };

Profile parse_profile(std::string_view name);
std::string_view to_string(Profile profile);

struct RunConfig {
  std::filesystem::path task_path;
  std::uint64_t seed = 1111;
  std::size_t batch_size = 128;  // sentences per encoder call
  std::size_t kfold = 10;
  Profile profile = Profile::standard;
  ClassifierConfig classifier = ClassifierConfig::default_profile();
  RetrievalConfig retrieval;
  std::string encoder;  // bow:<path> | precomputed:<path> | subprocess:<command>
  std::vector<std::string> tasks;
  LoadOptions load;
  int parallel = 1;  // concurrent task runs
  int workers = 1;   // threads inside one task (folds, grid points)
  bool fail_fast = false;
  bool include_timing = false;
  double encoder_timeout_s = 120.0;

  /// Resets the classifier head fields owned by the profile.
  void apply_profile(Profile p);

  /// Applies a JSON config document on top of the current values.
  void apply_json(std::string_view text);

  /// Throws ConfigError on invalid values or unknown task names.
  void validate() const;

  TaskRunOptions task_options() const;
};

struct TaskOutcome {
  std::string task;
  std::optional<EvalResult> result;
  std::string error;
  double wall_seconds = 0.0;

  bool ok() const noexcept { return result.has_value(); }
};

struct RunReport {
  RunConfig config;
  std::vector<TaskOutcome> tasks;
  std::vector<std::string> warnings;

  bool ok() const;
};

using EncoderFactory = std::function<std::unique_ptr<Encoder>()>;

/// Loads each task, prepares the encoder on its sentences and runs it.
/// Task failures are recorded (or abort the remaining tasks with
/// fail_fast). Concurrent runs use one encoder per task and are refused for
/// encoders that are not shareable.
RunReport run(const RunConfig& config, const EncoderFactory& factory);
RunReport run(const RunConfig& config);

/// Stable key order, shortest round-trip doubles. Wall times only when
/// config.include_timing is set.
std::string render_json(const RunReport& report);

/// One row per task with its headline metrics (percentages, one decimal).
std::string render_markdown(const RunReport& report);

using LogSink = std::function<void(std::string_view)>;

/// Progress lines (per-task wall time, chosen lambdas). Defaults to stderr.
void set_log_sink(LogSink sink);

}  // namespace embeval
