// embeval: evaluate a sentence encoder on the transfer task suite.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "embeval/encoders.hpp"
#include "embeval/error.hpp"
#include "embeval/ingest.hpp"
#include "embeval/report.hpp"
#include "embeval/subprocess_encoder.hpp"

namespace {

constexpr int kExitTaskFailed = 1;
constexpr int kExitUsage = 2;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw embeval::ConfigError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw embeval::ConfigError("cannot write " + path);
  out << text;
  if (!out.flush()) throw embeval::ConfigError("failed writing " + path);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string data_dir_or_env(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("EMBEVAL_DATA")) return env;
  return {};
}

struct RunArgs {
  std::string config_file;
  std::string tasks;
  std::string encoder;
  std::string data;
  std::string profile;
  std::string out;
  std::string markdown;
  std::string l2_grid;
  std::uint64_t seed = 0;
  std::size_t kfold = 0;
  std::size_t batch_size = 0;
  std::size_t nhid = 0;
  double dropout = -1.0;
  int parallel = 0;
  int workers = 0;
  double timeout = 0.0;
  bool fail_fast = false;
  bool lowercase = false;
  bool pretokenized = false;
  bool timing = false;
};

int cmd_run(const RunArgs& a, CLI::App& sub) {
  embeval::RunConfig config;
  if (!a.config_file.empty()) config.apply_json(read_text(a.config_file));
  // Profile first: it resets the head fields that later flags may override.
  if (!a.profile.empty()) config.apply_profile(embeval::parse_profile(a.profile));
  if (!a.tasks.empty()) config.tasks = split_csv(a.tasks);
  if (!a.encoder.empty()) config.encoder = a.encoder;
  if (const std::string d = data_dir_or_env(a.data); !d.empty() && (!a.data.empty() || config.task_path.empty())) {
    config.task_path = d;
  }
  if (sub.count("--seed")) config.seed = a.seed;
  if (sub.count("--kfold")) config.kfold = a.kfold;
  if (sub.count("--batch-size")) config.batch_size = a.batch_size;
  if (sub.count("--nhid")) config.classifier.nhid = a.nhid;
  if (sub.count("--dropout")) config.classifier.dropout = a.dropout;
  if (!a.l2_grid.empty()) {
    config.classifier.l2_grid.clear();
    for (const auto& v : split_csv(a.l2_grid)) config.classifier.l2_grid.push_back(std::stod(v));
  }
  if (sub.count("--parallel")) config.parallel = a.parallel;
  if (sub.count("--workers")) config.workers = a.workers;
  if (sub.count("--encoder-timeout")) config.encoder_timeout_s = a.timeout;
  if (a.fail_fast) config.fail_fast = true;
  if (a.lowercase) config.load.lowercase = true;
  if (a.pretokenized) config.load.pretokenized = true;
  if (a.timing) config.include_timing = true;
  if (config.tasks.empty()) throw embeval::ConfigError("no tasks requested (--tasks)");

  const embeval::RunReport report = embeval::run(config);
  const std::string json = embeval::render_json(report);
  if (a.out.empty()) {
    std::cout << json;
  } else {
    write_text(a.out, json);
  }
  if (!a.markdown.empty()) write_text(a.markdown, embeval::render_markdown(report));
  else if (!a.out.empty()) std::cout << embeval::render_markdown(report);

  for (const auto& t : report.tasks) {
    if (!t.ok()) std::cerr << "error: " << t.task << ": " << t.error << "\n";
  }
  return report.ok() ? 0 : kExitTaskFailed;
}

int cmd_validate(const std::string& data_flag, const std::string& tasks_flag, bool pretokenized) {
  const std::string dir = data_dir_or_env(data_flag);
  if (dir.empty()) throw embeval::ConfigError("--data or EMBEVAL_DATA is required");
  std::vector<std::string> names = tasks_flag.empty() ? std::vector<std::string>{} : split_csv(tasks_flag);
  if (names.empty()) {
    // Validate whatever task directories are present.
    for (const auto& n : embeval::task_names()) {
      if (std::filesystem::is_directory(std::filesystem::path(dir) / n)) names.push_back(n);
    }
    if (names.empty()) throw embeval::ConfigError("no task directories found under " + dir);
  }
  embeval::LoadOptions opts;
  opts.pretokenized = pretokenized;
  int failures = 0;
  for (const auto& n : names) {
    try {
      const embeval::TaskData data = embeval::load_task(n, dir, opts);
      embeval::validate_task(data);
      std::size_t records = 0;
      for (const auto& [split, rs] : data.splits) records += rs.size();
      for (const auto& s : data.subtasks) records += s.records.size();
      std::cout << "ok      " << n << " (" << records << " records)\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "invalid " << n << ": " << e.what() << "\n";
    }
  }
  return failures == 0 ? 0 : kExitTaskFailed;
}

int cmd_probe(const std::string& spec, double timeout) {
  embeval::EncoderOptions opts;
  opts.subprocess_timeout_s = timeout;
  auto encoder = embeval::make_encoder(spec, opts);
  const std::vector<embeval::Tokens> sample = {
      {"a", "man", "is", "playing", "a", "guitar", "."},
      {"the", "cat", "sat", "on", "the", "mat", "."},
      {"hello"},
      {"it", "does", "n't", "matter"},
  };
  encoder->prepare(sample);
  const auto probe = embeval::probe_determinism(*encoder, sample, sample.size());
  std::cout << "encoder  " << encoder->name() << "\n"
            << "dim      " << encoder->dim() << "\n"
            << "probe    " << (probe.deterministic ? "deterministic" : "NOT deterministic")
            << " (max abs diff " << probe.max_abs_diff << " over " << probe.sentences << " sentences)\n";
  if (auto* sub = dynamic_cast<embeval::SubprocessEncoder*>(encoder.get())) {
    const int code = sub->shutdown();
    std::cout << "shutdown exit code " << code << "\n";
    if (code != 0) return kExitTaskFailed;
  }
  return probe.deterministic ? 0 : kExitTaskFailed;
}

int cmd_export(const std::string& data_flag, const std::string& tasks_flag, bool pretokenized,
               bool lowercase, const std::string& out_path) {
  const std::string dir = data_dir_or_env(data_flag);
  if (dir.empty()) throw embeval::ConfigError("--data or EMBEVAL_DATA is required");
  embeval::LoadOptions opts;
  opts.pretokenized = pretokenized;
  opts.lowercase = lowercase;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) throw embeval::ConfigError("cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  std::unordered_set<std::string> seen;
  for (const auto& n : split_csv(tasks_flag)) {
    const auto data = embeval::load_task(n, dir, opts);
    for (const auto& s : embeval::task_sentences(data)) {
      std::string id = embeval::sentence_id(s);
      if (!seen.insert(id).second) continue;
      out << id << '\t' << embeval::join_tokens(s) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence embedding evaluation harness"};
  app.set_version_flag("--version", std::string(embeval::kHarnessVersion));
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Evaluate an encoder on a list of tasks");
  run->add_option("--config", ra.config_file, "JSON config file; flags override it");
  run->add_option("--tasks", ra.tasks, "Comma-separated task names");
  run->add_option("--encoder", ra.encoder, "bow:<path> | precomputed:<path> | subprocess:<command>");
  run->add_option("--data", ra.data, "Task data directory (falls back to EMBEVAL_DATA)");
  run->add_option("--profile", ra.profile, "default | prototyping");
  run->add_option("--seed", ra.seed, "Random seed (default 1111)");
  run->add_option("--out", ra.out, "JSON report path (stdout when omitted)");
  run->add_option("--markdown", ra.markdown, "Markdown table path");
  run->add_option("--parallel", ra.parallel, "Concurrent task runs");
  run->add_option("--workers", ra.workers, "Threads inside one task (folds, grid points)");
  run->add_option("--kfold", ra.kfold, "Folds for CV protocols (default 10)");
  run->add_option("--batch-size", ra.batch_size, "Sentences per encoder call (default 128)");
  run->add_option("--nhid", ra.nhid, "Hidden units; 0 = logistic regression");
  run->add_option("--dropout", ra.dropout, "Hidden-layer dropout for the MLP");
  run->add_option("--l2-grid", ra.l2_grid, "Comma-separated L2 penalties to search");
  run->add_option("--encoder-timeout", ra.timeout, "Seconds to wait on a subprocess encoder");
  run->add_flag("--fail-fast", ra.fail_fast, "Stop after the first failing task");
  run->add_flag("--lowercase", ra.lowercase, "Lowercase all tokens");
  run->add_flag("--pretokenized", ra.pretokenized, "Split text on whitespace only");
  run->add_flag("--timing", ra.timing, "Include wall times in the JSON report");

  std::string v_data, v_tasks;
  bool v_pretok = false;
  auto* validate = app.add_subcommand("validate", "Check task data files without running anything");
  validate->add_option("--data", v_data, "Task data directory (falls back to EMBEVAL_DATA)");
  validate->add_option("--tasks", v_tasks, "Comma-separated task names (default: all present)");
  validate->add_flag("--pretokenized", v_pretok, "Split text on whitespace only");

  std::string p_encoder;
  double p_timeout = 120.0;
  auto* probe = app.add_subcommand("probe-encoder", "Handshake with an encoder and check determinism");
  probe->add_option("--encoder", p_encoder, "Encoder spec")->required();
  probe->add_option("--timeout", p_timeout, "Seconds to wait on a subprocess encoder");

  std::string e_data, e_tasks, e_out;
  bool e_pretok = false, e_lower = false;
  auto* exp = app.add_subcommand("export-sentences",
                                 "Print `id<TAB>sentence` lines for building a precomputed embedding file");
  exp->add_option("--data", e_data, "Task data directory (falls back to EMBEVAL_DATA)");
  exp->add_option("--tasks", e_tasks, "Comma-separated task names")->required();
  exp->add_option("--out", e_out, "Output path (stdout when omitted)");
  exp->add_flag("--pretokenized", e_pretok, "Split text on whitespace only");
  exp->add_flag("--lowercase", e_lower, "Lowercase all tokens");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(ra, *run);
    if (*validate) return cmd_validate(v_data, v_tasks, v_pretok);
    if (*probe) return cmd_probe(p_encoder, p_timeout);
    if (*exp) return cmd_export(e_data, e_tasks, e_pretok, e_lower, e_out);
  } catch (const embeval::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTaskFailed;
  }
  return kExitUsage;
}
