#include "embeval/report.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "embeval/error.hpp"
#include "embeval/parallel.hpp"

namespace embeval {

using json = nlohmann::json;

namespace {

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

LogSink& log_sink() {
  static LogSink sink = [](std::string_view line) { std::cerr << "[embeval] " << line << '\n'; };
  return sink;
}

void log_line(const std::string& line) {
  std::lock_guard lock(log_mutex());
  if (log_sink()) log_sink()(line);
}

std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string short_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard lock(log_mutex());
  log_sink() = std::move(sink);
}

Profile parse_profile(std::string_view name) {
  if (name == "default") return Profile::standard;
  if (name == "prototyping") return Profile::prototyping;
  throw ConfigError("unknown profile '" + std::string(name) + "' (expected default or prototyping)");
}

std::string_view to_string(Profile profile) {
  return profile == Profile::standard ? "default" : "prototyping";
}

void RunConfig::apply_profile(Profile p) {
  profile = p;
  const ClassifierConfig base = p == Profile::standard ? ClassifierConfig::default_profile()
                                                       : ClassifierConfig::prototyping_profile();
  classifier.nhid = base.nhid;
  classifier.optim = base.optim;
  classifier.batch_size = base.batch_size;
  classifier.tenacity = base.tenacity;
  classifier.epoch_size = base.epoch_size;
}

void RunConfig::apply_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file must be a JSON object");
  try {
    if (doc.contains("profile")) apply_profile(parse_profile(doc["profile"].get<std::string>()));
    if (doc.contains("task_path")) task_path = doc["task_path"].get<std::string>();
    if (doc.contains("seed")) seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("batch_size")) batch_size = doc["batch_size"].get<std::size_t>();
    if (doc.contains("kfold")) kfold = doc["kfold"].get<std::size_t>();
    if (doc.contains("encoder")) encoder = doc["encoder"].get<std::string>();
    if (doc.contains("tasks")) tasks = doc["tasks"].get<std::vector<std::string>>();
    if (doc.contains("lowercase")) load.lowercase = doc["lowercase"].get<bool>();
    if (doc.contains("pretokenized")) load.pretokenized = doc["pretokenized"].get<bool>();
    if (doc.contains("workers")) workers = doc["workers"].get<int>();
    if (doc.contains("classifier")) {
      const json& c = doc["classifier"];
      if (c.contains("nhid")) classifier.nhid = c["nhid"].get<std::size_t>();
      if (c.contains("optim")) classifier.optim = parse_optim(c["optim"].get<std::string>());
      if (c.contains("batch_size")) classifier.batch_size = c["batch_size"].get<std::size_t>();
      if (c.contains("tenacity")) classifier.tenacity = c["tenacity"].get<int>();
      if (c.contains("epoch_size")) classifier.epoch_size = c["epoch_size"].get<int>();
      if (c.contains("dropout")) classifier.dropout = c["dropout"].get<double>();
      if (c.contains("l2_grid")) classifier.l2_grid = c["l2_grid"].get<std::vector<double>>();
      if (c.contains("lr")) classifier.lr = c["lr"].get<double>();
      if (c.contains("max_epochs")) classifier.max_epochs = c["max_epochs"].get<int>();
    }
    if (doc.contains("retrieval")) {
      const json& r = doc["retrieval"];
      if (r.contains("joint_dim")) retrieval.joint_dim = r["joint_dim"].get<std::size_t>();
      if (r.contains("margin")) retrieval.margin = r["margin"].get<double>();
      if (r.contains("batch_size")) retrieval.batch_size = r["batch_size"].get<std::size_t>();
      if (r.contains("lr")) retrieval.lr = r["lr"].get<double>();
      if (r.contains("n_splits")) retrieval.n_splits = r["n_splits"].get<std::size_t>();
      if (r.contains("max_epochs")) retrieval.max_epochs = r["max_epochs"].get<int>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value in config file: ") + e.what());
  }
}

void RunConfig::validate() const {
  if (task_path.empty()) throw ConfigError("task_path is required (--data or EMBEVAL_DATA)");
  if (batch_size == 0) throw ConfigError("encoder batch_size must be > 0");
  if (kfold < 2) throw ConfigError("kfold must be >= 2");
  if (parallel < 1) throw ConfigError("parallel must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (encoder.empty()) throw ConfigError("an encoder is required (--encoder)");
  classifier.validate();
  task_options().retrieval.validate();
  for (const auto& t : tasks) find_task(t);
}

TaskRunOptions RunConfig::task_options() const {
  TaskRunOptions o;
  o.classifier = classifier;
  o.classifier.seed = seed;
  o.classifier.workers = workers;
  o.kfold = kfold;
  o.encoder_batch_size = batch_size;
  o.retrieval = retrieval;
  o.retrieval.seed = seed;
  o.retrieval.tenacity = classifier.tenacity;
  o.retrieval.epoch_size = classifier.epoch_size;
  return o;
}

bool RunReport::ok() const {
  for (const auto& t : tasks) {
    if (!t.ok()) return false;
  }
  return true;
}

namespace {

std::string chosen_l2_summary(const EvalResult& r) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ClassificationResult>) {
          if (!p.fold_l2.empty()) {
            std::string s = "fold l2 =";
            for (double l2 : p.fold_l2) s += " " + short_number(l2);
            return s;
          }
          return "l2 = " + short_number(p.best_l2);
        } else if constexpr (std::is_same_v<T, RelatednessResult>) {
          return "l2 = " + short_number(p.best_l2);
        } else {
          return "no l2 selection";
        }
      },
      r.payload);
}

TaskOutcome run_one(const RunConfig& config, const std::string& name, Encoder& encoder,
                    std::vector<std::string>& warnings, std::mutex& warnings_mutex) {
  TaskOutcome out;
  out.task = name;
  const auto start = std::chrono::steady_clock::now();
  try {
    const TaskData data = load_task(name, config.task_path, config.load);
    const auto sentences = task_sentences(data);
    encoder.prepare(sentences);
    const DeterminismProbe probe = probe_determinism(encoder, sentences, 10);
    if (!probe.deterministic) {
      const std::string w = name + ": encoder " + encoder.name() +
                            " is not deterministic (max abs diff " + short_number(probe.max_abs_diff) +
                            " over " + std::to_string(probe.sentences) + " sentences)";
      log_line("warning: " + w);
      std::lock_guard lock(warnings_mutex);
      warnings.push_back(w);
    }
    out.result = run_prepared_task(data, encoder, config.task_options());
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (out.ok()) {
    log_line(name + ": done in " + fixed1(out.wall_seconds) + " s, " + chosen_l2_summary(*out.result));
  } else {
    log_line(name + ": failed after " + fixed1(out.wall_seconds) + " s: " + out.error);
  }
  return out;
}

}  // namespace

RunReport run(const RunConfig& config, const EncoderFactory& factory) {
  config.validate();
  RunReport report;
  report.config = config;
  report.tasks.resize(config.tasks.size());
  std::mutex warnings_mutex;

  std::unique_ptr<Encoder> shared = factory();
  if (config.parallel > 1 && !shared->shareable()) {
    throw ConfigError("--parallel > 1 is not allowed with encoder " + shared->name() +
                      " (one subprocess serves one task at a time)");
  }

  if (config.parallel <= 1) {
    bool aborted = false;
    for (std::size_t i = 0; i < config.tasks.size(); ++i) {
      if (aborted) {
        report.tasks[i].task = config.tasks[i];
        report.tasks[i].error = "not run: aborted after an earlier task failed (fail-fast)";
        continue;
      }
      report.tasks[i] = run_one(config, config.tasks[i], *shared, report.warnings, warnings_mutex);
      if (!report.tasks[i].ok() && config.fail_fast) aborted = true;
    }
    return report;
  }

  shared.reset();
  std::vector<std::vector<std::string>> task_warnings(config.tasks.size());
  parallel_for(config.tasks.size(), config.parallel, [&](std::size_t i) {
    auto encoder = factory();
    report.tasks[i] = run_one(config, config.tasks[i], *encoder, task_warnings[i], warnings_mutex);
  });
  for (auto& w : task_warnings) report.warnings.insert(report.warnings.end(), w.begin(), w.end());
  return report;
}

RunReport run(const RunConfig& config) {
  EncoderOptions opts;
  opts.subprocess_timeout_s = config.encoder_timeout_s;
  return run(config, [&config, opts] { return make_encoder(config.encoder, opts); });
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

json direction_json(const DirectionScores& d) {
  return {{"r1", d.r1}, {"r5", d.r5}, {"r10", d.r10}, {"medr", d.medr}};
}

json retrieval_scores_json(const RetrievalScores& s) {
  return {{"n_images", s.n_images},
          {"n_captions", s.n_captions},
          {"caption_retrieval", direction_json(s.caption_retrieval)},
          {"image_retrieval", direction_json(s.image_retrieval)}};
}

json correlation_json(const CorrelationPair& c) {
  return {{"pearson", c.pearson}, {"spearman", c.spearman}};
}

json payload_json(const EvalPayload& payload) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ClassificationResult>) {
          json j = {{"dev_accuracy", p.dev_accuracy},
                    {"test_accuracy", p.test_accuracy},
                    {"n_train", p.n_train},
                    {"n_dev", p.n_dev},
                    {"n_test", p.n_test}};
          if (p.f1) j["f1"] = *p.f1;
          if (!p.fold_accuracies.empty()) {
            j["fold_accuracies"] = p.fold_accuracies;
            j["fold_l2"] = p.fold_l2;
          } else {
            j["best_l2"] = p.best_l2;
          }
          return j;
        } else if constexpr (std::is_same_v<T, RelatednessResult>) {
          return {{"pearson", p.pearson},     {"spearman", p.spearman}, {"mse", p.mse},
                  {"dev_pearson", p.dev_pearson}, {"best_l2", p.best_l2},  {"n_train", p.n_train},
                  {"n_dev", p.n_dev},         {"n_test", p.n_test}};
        } else if constexpr (std::is_same_v<T, StsAggregate>) {
          json subs = json::array();
          for (const auto& s : p.subtasks) {
            subs.push_back({{"name", s.name}, {"count", s.count}, {"correlation", correlation_json(s.corr)}});
          }
          return {{"subtasks", subs},
                  {"mean", correlation_json(p.mean)},
                  {"weighted_mean", correlation_json(p.weighted_mean)}};
        } else {
          json splits = json::array();
          for (const auto& s : p.splits) splits.push_back(retrieval_scores_json(s));
          return {{"splits", splits},
                  {"mean", retrieval_scores_json(p.mean)},
                  {"dev_score", p.dev_score},
                  {"epochs_run", p.epochs_run}};
        }
      },
      payload);
}

json config_json(const RunConfig& c) {
  const ClassifierConfig& k = c.classifier;
  return {{"task_path", c.task_path.string()},
          {"seed", c.seed},
          {"batch_size", c.batch_size},
          {"kfold", c.kfold},
          {"profile", std::string(to_string(c.profile))},
          {"encoder", c.encoder},
          {"tasks", c.tasks},
          {"lowercase", c.load.lowercase},
          {"pretokenized", c.load.pretokenized},
          {"classifier",
           {{"nhid", k.nhid},
            {"optim", std::string(to_string(k.optim))},
            {"batch_size", k.batch_size},
            {"tenacity", k.tenacity},
            {"epoch_size", k.epoch_size},
            {"dropout", k.dropout},
            {"l2_grid", k.l2_grid},
            {"lr", k.lr},
            {"max_epochs", k.max_epochs}}},
          {"retrieval",
           {{"joint_dim", c.retrieval.joint_dim},
            {"margin", c.retrieval.margin},
            {"batch_size", c.retrieval.batch_size},
            {"lr", c.retrieval.lr},
            {"n_splits", c.retrieval.n_splits},
            {"max_epochs", c.retrieval.max_epochs}}}};
}

std::string pct(double v) { return fixed1(100.0 * v); }

std::string headline(const EvalResult& r) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ClassificationResult>) {
          if (p.f1) return pct(p.test_accuracy) + "/" + pct(*p.f1);
          return pct(p.test_accuracy);
        } else if constexpr (std::is_same_v<T, RelatednessResult>) {
          return pct(p.pearson) + "/" + pct(p.spearman);
        } else if constexpr (std::is_same_v<T, StsAggregate>) {
          return pct(p.mean.pearson) + "/" + pct(p.mean.spearman) + " (weighted " +
                 pct(p.weighted_mean.pearson) + "/" + pct(p.weighted_mean.spearman) + ")";
        } else {
          auto dir = [](const DirectionScores& d) {
            return pct(d.r1) + "/" + pct(d.r5) + "/" + pct(d.r10) + "/" + fixed1(d.medr);
          };
          return "caption " + dir(p.mean.caption_retrieval) + "; image " + dir(p.mean.image_retrieval);
        }
      },
      r.payload);
}

std::string metric_label(TaskKind kind) {
  switch (kind) {
    case TaskKind::classification:
    case TaskKind::pair_classification:
      return "acc";
    case TaskKind::paraphrase:
      return "acc/F1";
    case TaskKind::relatedness:
    case TaskKind::sts_unsupervised:
      return "Pearson/Spearman x100";
    case TaskKind::caption_retrieval:
      return "R@1/R@5/R@10/medr";
  }
  return "";
}

}  // namespace

std::string render_json(const RunReport& report) {
  json tasks = json::array();
  for (const auto& t : report.tasks) {
    json entry = {{"task", t.task}};
    if (t.ok()) {
      entry["status"] = "ok";
      entry["kind"] = std::string(to_string(t.result->kind));
      entry["result"] = payload_json(t.result->payload);
    } else {
      entry["status"] = "error";
      entry["error"] = t.error;
    }
    if (report.config.include_timing) entry["wall_seconds"] = t.wall_seconds;
    tasks.push_back(std::move(entry));
  }
  json doc = {{"schema_version", kSchemaVersion},
              {"harness_version", std::string(kHarnessVersion)},
              {"seed", report.config.seed},
              {"config", config_json(report.config)},
              {"tasks", tasks},
              {"warnings", report.warnings}};
  return doc.dump(2) + "\n";
}

std::string render_markdown(const RunReport& report) {
  std::ostringstream os;
  os << "| Task | Metric | Score |\n";
  os << "|------|--------|-------|\n";
  for (const auto& t : report.tasks) {
    if (t.ok()) {
      os << "| " << t.task << " | " << metric_label(t.result->kind) << " | " << headline(*t.result)
         << " |\n";
    } else {
      std::string err = t.error;
      for (char& c : err) {
        if (c == '\n' || c == '|') c = ' ';
      }
      os << "| " << t.task << " | error | " << err << " |\n";
    }
  }
  return os.str();
}

}  // namespace embeval
