#include "embeval/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "embeval/error.hpp"

namespace embeval {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::classification:
      return "classification";
    case TaskKind::pair_classification:
      return "pair_classification";
    case TaskKind::relatedness:
      return "relatedness";
    case TaskKind::sts_unsupervised:
      return "sts_unsupervised";
    case TaskKind::paraphrase:
      return "paraphrase";
    case TaskKind::caption_retrieval:
      return "caption_retrieval";
  }
  return "unknown";
}

namespace {

TaskSpec classification(std::string name, std::size_t classes, SplitKind protocol,
                        std::vector<std::string> splits) {
  TaskSpec t;
  t.name = std::move(name);
  t.kind = TaskKind::classification;
  t.n_classes = classes;
  t.protocol = protocol;
  t.splits = std::move(splits);
  return t;
}

TaskSpec nli(std::string name) {
  TaskSpec t;
  t.name = std::move(name);
  t.kind = TaskKind::pair_classification;
  t.n_classes = 3;
  t.protocol = SplitKind::fixed_split;
  t.splits = {"train", "dev", "test"};
  t.label_names = {"contradiction", "neutral", "entailment"};
  return t;
}

TaskSpec relatedness(std::string name, int lo, int hi) {
  TaskSpec t;
  t.name = std::move(name);
  t.kind = TaskKind::relatedness;
  t.score_range = {lo, hi};
  t.n_classes = t.score_range.bins();
  t.protocol = SplitKind::fixed_split;
  t.splits = {"train", "dev", "test"};
  return t;
}

TaskSpec sts(std::string name) {
  TaskSpec t;
  t.name = std::move(name);
  t.kind = TaskKind::sts_unsupervised;
  t.score_range = {0, 5};
  return t;
}

std::vector<TaskSpec> build_catalog() {
  std::vector<TaskSpec> c;
  for (const char* name : {"MR", "CR", "SUBJ", "MPQA"}) {
    c.push_back(classification(name, 2, SplitKind::nested_kfold, {"train"}));
  }
  c.push_back(classification("TREC", 6, SplitKind::cv_train_fixed_test, {"train", "test"}));
  c.push_back(classification("SST-2", 2, SplitKind::fixed_split, {"train", "dev", "test"}));
  c.push_back(classification("SST-5", 5, SplitKind::fixed_split, {"train", "dev", "test"}));
  c.push_back(nli("SNLI"));
  c.push_back(nli("SICK-E"));
  TaskSpec mrpc;
  mrpc.name = "MRPC";
  mrpc.kind = TaskKind::paraphrase;
  mrpc.n_classes = 2;
  mrpc.protocol = SplitKind::cv_train_fixed_test;
  mrpc.splits = {"train", "test"};
  c.push_back(mrpc);
  c.push_back(relatedness("SICK-R", 1, 5));
  c.push_back(relatedness("STS-B", 0, 5));
  for (const char* name : {"STS12", "STS13", "STS14", "STS15", "STS16"}) c.push_back(sts(name));
  TaskSpec coco;
  coco.name = "COCO";
  coco.kind = TaskKind::caption_retrieval;
  coco.protocol = SplitKind::fixed_split;
  coco.splits = {"train", "dev", "test"};
  c.push_back(coco);
  return c;
}

std::string where(const std::filesystem::path& file, std::size_t line) {
  return file.string() + ":" + std::to_string(line);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

struct LineReader {
  const TaskSpec& spec;
  const LoadOptions& options;

  Tokens text(std::string_view s, const std::filesystem::path& file, std::size_t line) const {
    Tokens t;
    try {
      t = options.pretokenized ? split_whitespace(s) : tokenize(s);
    } catch (const DataError& e) {
      throw DataError(where(file, line) + ": " + e.what());
    }
    if (options.lowercase) lowercase_tokens(t);
    return t;
  }

  int label(std::string_view s, const std::filesystem::path& file, std::size_t line) const {
    for (std::size_t i = 0; i < spec.label_names.size(); ++i) {
      if (s == spec.label_names[i]) return static_cast<int>(i);
    }
    int v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) {
      throw DataError(where(file, line) + ": malformed label '" + std::string(s) + "'");
    }
    if (v < 0 || static_cast<std::size_t>(v) >= spec.n_classes) {
      throw DataError(where(file, line) + ": label " + std::to_string(v) + " outside [0, " +
                      std::to_string(spec.n_classes) + ")");
    }
    return v;
  }

  double score(std::string_view s, const std::filesystem::path& file, std::size_t line) const {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
      throw DataError(where(file, line) + ": malformed score '" + std::string(s) + "'");
    }
    if (!spec.score_range.contains(v)) {
      std::ostringstream os;
      os << where(file, line) << ": score " << v << " outside [" << spec.score_range.lo << ", "
         << spec.score_range.hi << "]";
      throw DataError(os.str());
    }
    return v;
  }
};

std::vector<Record> read_records(const std::filesystem::path& file, const TaskSpec& spec,
                                 const LoadOptions& options, TaskKind layout) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("missing data file " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  const LineReader reader{spec, options};
  std::vector<Record> records;
  records.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto fields = split_tabs(lines[i]);
    Record r;
    auto expect = [&](std::size_t n) {
      if (fields.size() != n) {
        throw DataError(where(file, line_no) + ": expected " + std::to_string(n) +
                        " tab-separated fields, got " + std::to_string(fields.size()));
      }
    };
    switch (layout) {
      case TaskKind::classification:
        expect(2);
        r.label = reader.label(fields[0], file, line_no);
        r.first = reader.text(fields[1], file, line_no);
        break;
      case TaskKind::pair_classification:
      case TaskKind::paraphrase:
        expect(3);
        r.label = reader.label(fields[0], file, line_no);
        r.first = reader.text(fields[1], file, line_no);
        r.second = reader.text(fields[2], file, line_no);
        break;
      case TaskKind::relatedness:
      case TaskKind::sts_unsupervised:
        expect(3);
        r.score = reader.score(fields[0], file, line_no);
        r.first = reader.text(fields[1], file, line_no);
        r.second = reader.text(fields[2], file, line_no);
        break;
      case TaskKind::caption_retrieval:
        expect(2);
        if (fields[0].empty()) throw DataError(where(file, line_no) + ": empty image id");
        r.image_id = std::string(fields[0]);
        r.first = reader.text(fields[1], file, line_no);
        break;
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

const std::vector<TaskSpec>& task_catalog() {
  static const std::vector<TaskSpec> catalog = build_catalog();
  return catalog;
}

std::vector<std::string> task_names() {
  std::vector<std::string> names;
  for (const auto& t : task_catalog()) names.push_back(t.name);
  return names;
}

const TaskSpec& find_task(std::string_view name) {
  for (const auto& t : task_catalog()) {
    if (t.name == name) return t;
  }
  std::string valid;
  for (const auto& t : task_catalog()) valid += (valid.empty() ? "" : ", ") + t.name;
  throw ConfigError("unknown task '" + std::string(name) + "'; valid tasks: " + valid);
}

const std::vector<Record>& TaskData::split(const std::string& name) const {
  auto it = splits.find(name);
  if (it == splits.end()) throw DataError("task " + spec.name + " has no '" + name + "' split");
  return it->second;
}

TaskData load_task(std::string_view name, const std::filesystem::path& data_dir,
                   const LoadOptions& options) {
  TaskData data;
  data.spec = find_task(name);
  const auto dir = data_dir / data.spec.name;
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("missing task directory " + dir.string());
  }
  LoadOptions opts = options;
  if (std::filesystem::exists(dir / "PRETOKENIZED")) opts.pretokenized = true;

  if (data.spec.kind == TaskKind::sts_unsupervised) {
    const auto sub_dir = dir / "subtasks";
    if (!std::filesystem::is_directory(sub_dir)) throw DataError("missing directory " + sub_dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(sub_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".tsv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      data.subtasks.push_back({f.stem().string(), read_records(f, data.spec, opts, data.spec.kind)});
    }
  } else {
    for (const auto& split : data.spec.splits) {
      data.splits[split] = read_records(dir / (split + ".tsv"), data.spec, opts, data.spec.kind);
    }
  }

  if (data.spec.kind == TaskKind::caption_retrieval) {
    std::unordered_set<std::string> wanted;
    for (const auto& [_, records] : data.splits) {
      for (const auto& r : records) wanted.insert(r.image_id);
    }
    data.images.table = read_vector_file(
        dir / "features.vec",
        [&wanted](std::string_view id) { return wanted.contains(std::string(id)); },
        opts.image_dim);
  }

  validate_task(data);
  return data;
}

void validate_task(const TaskData& data) {
  const TaskSpec& spec = data.spec;
  if (spec.kind == TaskKind::sts_unsupervised) {
    if (data.subtasks.empty()) throw DataError("task " + spec.name + " has no subtasks");
    for (const auto& sub : data.subtasks) {
      if (sub.records.size() < 2) {
        throw DataError("task " + spec.name + " subtask " + sub.name + " needs at least 2 pairs");
      }
      for (const auto& r : sub.records) {
        if (!spec.score_range.contains(r.score)) {
          throw DataError("task " + spec.name + " subtask " + sub.name + ": score out of range");
        }
      }
    }
    return;
  }
  for (const auto& split : spec.splits) {
    auto it = data.splits.find(split);
    if (it == data.splits.end()) throw DataError("task " + spec.name + " is missing split '" + split + "'");
    if (it->second.empty()) throw DataError("task " + spec.name + " split '" + split + "' is empty");
    for (const auto& r : it->second) {
      switch (spec.kind) {
        case TaskKind::classification:
        case TaskKind::pair_classification:
        case TaskKind::paraphrase:
          if (r.label < 0 || static_cast<std::size_t>(r.label) >= spec.n_classes) {
            throw DataError("task " + spec.name + " split '" + split + "': label out of range");
          }
          break;
        case TaskKind::relatedness:
          if (!spec.score_range.contains(r.score)) {
            throw DataError("task " + spec.name + " split '" + split + "': score out of range");
          }
          break;
        case TaskKind::caption_retrieval:
          if (!data.images.contains(r.image_id)) {
            throw DataError("task " + spec.name + " split '" + split + "': no features for image '" +
                            r.image_id + "'");
          }
          break;
        case TaskKind::sts_unsupervised:
          break;
      }
    }
  }
}

std::vector<Tokens> task_sentences(const TaskData& data) {
  std::vector<Tokens> out;
  auto add = [&out, &data](const std::vector<Record>& records) {
    for (const auto& r : records) {
      out.push_back(r.first);
      if (data.spec.kind != TaskKind::classification && data.spec.kind != TaskKind::caption_retrieval) {
        out.push_back(r.second);
      }
    }
  };
  for (const auto& split : data.spec.splits) {
    if (auto it = data.splits.find(split); it != data.splits.end()) add(it->second);
  }
  for (const auto& sub : data.subtasks) add(sub.records);
  return out;
}

}  // namespace embeval
