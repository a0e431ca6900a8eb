#include "embeval/encoders.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "embeval/error.hpp"
#include "embeval/subprocess_encoder.hpp"

namespace embeval {

namespace {

bool is_field_sep(char c) { return c == ' ' || c == '\t'; }

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_field_sep(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_field_sep(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_size(std::string_view s, std::size_t& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

double parse_value(std::string_view s, const std::filesystem::path& path, std::size_t line_no) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": unparsable value '" +
                    std::string(s) + "'");
  }
  return v;
}

bool is_header(const std::vector<std::string_view>& fields, std::size_t& dim) {
  std::size_t count = 0;
  return fields.size() == 2 && parse_size(fields[0], count) && parse_size(fields[1], dim);
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::optional<std::span<const double>> VectorTable::find(std::string_view key) const {
  auto it = index.find(std::string(key));
  if (it == index.end()) return std::nullopt;
  return vectors.row(it->second);
}

VectorTable read_vector_file(const std::filesystem::path& path,
                             const std::function<bool(std::string_view)>& keep,
                             std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vector file " + path.string());

  VectorTable table;
  std::size_t dim = expected_dim;
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    const auto fields = split_fields(line);
    if (fields.empty()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": empty line");
    }
    if (line_no == 1) {
      std::size_t header_dim = 0;
      if (is_header(fields, header_dim)) {
        if (expected_dim != 0 && header_dim != expected_dim) {
          throw DataError(path.string() + ":1: header declares dim " + std::to_string(header_dim) +
                          ", expected " + std::to_string(expected_dim));
        }
        dim = header_dim;
        continue;
      }
    }
    const std::size_t n_values = fields.size() - 1;
    if (dim == 0) dim = n_values;
    if (n_values != dim || n_values == 0) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " values, got " + std::to_string(n_values));
    }
    const std::string_view key = fields[0];
    if (keep && !keep(key)) continue;
    std::string key_str(key);
    if (table.index.contains(key_str)) continue;
    for (std::size_t k = 1; k < fields.size(); ++k) values.push_back(parse_value(fields[k], path, line_no));
    table.index.emplace(key_str, table.keys.size());
    table.keys.push_back(std::move(key_str));
  }
  if (dim == 0) throw DataError("vector file " + path.string() + " has no vectors");
  table.dim = dim;
  table.vectors = Matrix(table.keys.size(), dim, std::move(values));
  return table;
}

std::size_t peek_vector_dim(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vector file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("vector file " + path.string() + " is empty");
  strip_cr(line);
  const auto fields = split_fields(line);
  std::size_t dim = 0;
  if (is_header(fields, dim)) return dim;
  if (fields.size() < 2) throw DataError(path.string() + ":1: expected a key and values");
  return fields.size() - 1;
}

WordVecTable load_word_vectors(const std::filesystem::path& path,
                               const std::unordered_set<std::string>* restrict_vocab) {
  if (restrict_vocab == nullptr) return read_vector_file(path);
  return read_vector_file(path, [restrict_vocab](std::string_view token) {
    return restrict_vocab->contains(std::string(token));
  });
}

Matrix bow_encode(const WordVecTable& table, std::span<const Tokens> sentences) {
  Matrix out(sentences.size(), table.dim);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    auto row = out.row(i);
    std::size_t known = 0;
    for (const auto& token : sentences[i]) {
      const auto vec = table.find(token);
      if (!vec) continue;
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += (*vec)[j];
      ++known;
    }
    if (known > 0) {
      for (double& v : row) v /= static_cast<double>(known);
    }
  }
  return out;
}

std::string sentence_id(const Tokens& tokens) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001B3ULL;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) mix(' ');
    for (char c : tokens[i]) mix(static_cast<unsigned char>(c));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BowEncoder::BowEncoder(std::filesystem::path vectors_path, bool restrict_vocab)
    : path_(std::move(vectors_path)), restrict_(restrict_vocab), dim_(peek_vector_dim(path_)) {}

void BowEncoder::prepare(std::span<const Tokens> sentences) {
  if (!restrict_) {
    if (!loaded_) table_ = load_word_vectors(path_);
    loaded_ = true;
    return;
  }
  std::unordered_set<std::string> vocab;
  for (const auto& s : sentences) vocab.insert(s.begin(), s.end());
  table_ = load_word_vectors(path_, &vocab);
  loaded_ = true;
}

Matrix BowEncoder::encode_batch(std::span<const Tokens> batch) {
  if (!loaded_) {
    table_ = load_word_vectors(path_);
    loaded_ = true;
  }
  return bow_encode(table_, batch);
}

PrecomputedEncoder::PrecomputedEncoder(std::filesystem::path path)
    : path_(std::move(path)), table_(read_vector_file(path_)) {}

Matrix PrecomputedEncoder::encode_batch(std::span<const Tokens> batch) {
  Matrix out(batch.size(), table_.dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::string id = sentence_id(batch[i]);
    const auto vec = table_.find(id);
    if (!vec) {
      throw EncoderError("precomputed embeddings " + path_.string() + " have no row for sentence " +
                         id + " (\"" + join_tokens(batch[i]) + "\")");
    }
    std::copy(vec->begin(), vec->end(), out.row(i).begin());
  }
  return out;
}

Matrix encode_dataset(Encoder& encoder, std::span<const Tokens> sentences, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("encoder batch_size must be > 0");
  const std::size_t dim = encoder.dim();
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sentences[a].size() < sentences[b].size();
  });

  Matrix out(sentences.size(), dim);
  std::vector<Tokens> batch;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(order.size(), start + batch_size);
    batch.clear();
    for (std::size_t k = start; k < stop; ++k) batch.push_back(sentences[order[k]]);
    const Matrix emb = encoder.encode_batch(batch);
    if (emb.rows() != batch.size() || emb.cols() != dim) {
      throw EncoderError("encoder " + encoder.name() + " returned " + std::to_string(emb.rows()) +
                         "x" + std::to_string(emb.cols()) + " for a batch of " +
                         std::to_string(batch.size()) + " (dim " + std::to_string(dim) + ")");
    }
    if (!all_finite(emb.values())) {
      throw EncoderError("encoder " + encoder.name() + " returned non-finite values");
    }
    for (std::size_t k = start; k < stop; ++k) {
      auto src = emb.row(k - start);
      std::copy(src.begin(), src.end(), out.row(order[k]).begin());
    }
  }
  return out;
}

DeterminismProbe probe_determinism(Encoder& encoder, std::span<const Tokens> sentences,
                                   std::size_t limit) {
  const std::size_t n = std::min(limit, sentences.size());
  const auto probe = sentences.first(n);
  DeterminismProbe result;
  result.sentences = n;
  if (n == 0) return result;
  const Matrix first = encoder.encode_batch(probe);
  const Matrix second = encoder.encode_batch(probe);
  if (!first.same_shape(second)) {
    result.deterministic = false;
    result.max_abs_diff = INFINITY;
    return result;
  }
  for (std::size_t i = 0; i < first.size(); ++i) {
    result.max_abs_diff = std::max(result.max_abs_diff, std::abs(first.values()[i] - second.values()[i]));
  }
  result.deterministic = result.max_abs_diff == 0.0;
  return result;
}

std::unique_ptr<Encoder> make_encoder(std::string_view spec, const EncoderOptions& options) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string_view::npos || colon + 1 >= spec.size()) {
    throw ConfigError("encoder spec '" + std::string(spec) +
                      "' must be bow:<path>, precomputed:<path> or subprocess:<command>");
  }
  const std::string_view kind = spec.substr(0, colon);
  const std::string arg(spec.substr(colon + 1));
  if (kind == "bow") return std::make_unique<BowEncoder>(arg, options.restrict_vocab);
  if (kind == "precomputed") return std::make_unique<PrecomputedEncoder>(arg);
  if (kind == "subprocess") {
    SubprocessOptions sub;
    sub.timeout_s = options.subprocess_timeout_s;
    return std::make_unique<SubprocessEncoder>(arg, sub);
  }
  throw ConfigError("unknown encoder kind '" + std::string(kind) +
                    "' (expected bow, precomputed or subprocess)");
}

}  // namespace embeval
