#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "embeval/matrix.hpp"
#include "embeval/tokenize.hpp"

namespace embeval {

/// Rows keyed by string, as read from a `key v1 ... vd` text file.
struct VectorTable {
  std::size_t dim = 0;
  std::vector<std::string> keys;
  std::unordered_map<std::string, std::size_t> index;
  Matrix vectors;

  std::size_t size() const noexcept { return keys.size(); }
  /// Empty optional when the key is absent.
  std::optional<std::span<const double>> find(std::string_view key) const;
};

/// Parses a whitespace-separated vector file. An optional first line
/// `count dim` is recognized and skipped. Every line must carry the same
/// number of values (or `expected_dim` when nonzero); violations raise
/// DataError naming the line number. Keys rejected by `keep` are skipped
/// without parsing their values. Duplicate keys keep the first row.
VectorTable read_vector_file(const std::filesystem::path& path,
                             const std::function<bool(std::string_view)>& keep = {},
                             std::size_t expected_dim = 0);

/// Dimension from the header or first data line, without loading the file.
std::size_t peek_vector_dim(const std::filesystem::path& path);

using WordVecTable = VectorTable;

WordVecTable load_word_vectors(const std::filesystem::path& path,
                               const std::unordered_set<std::string>* restrict_vocab = nullptr);

/// Sentence = mean of its in-vocabulary token vectors; zero vector when no
/// token is known.
Matrix bow_encode(const WordVecTable& table, std::span<const Tokens> sentences);

/// Stable key for a sentence: 16 hex digits of FNV-1a 64 over the tokens
/// joined by single spaces. Used by precomputed embedding files.
std::string sentence_id(const Tokens& tokens);

/// The pluggable encoder boundary. Row i of encode_batch's output is the
/// embedding of batch[i]; dim() is fixed for the encoder's lifetime.
class Encoder {
 public:
  virtual ~Encoder() = default;

  /// Sees every sentence of a task before encoding; optional.
  virtual void prepare(std::span<const Tokens> sentences) { (void)sentences; }
  virtual Matrix encode_batch(std::span<const Tokens> batch) = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  /// False when one instance must not serve concurrent task runs.
  virtual bool shareable() const { return true; }
};

/// Averages word vectors. prepare() reloads the vector file restricted to
/// the task's vocabulary; without prepare the whole file is loaded lazily.
class BowEncoder final : public Encoder {
 public:
  explicit BowEncoder(std::filesystem::path vectors_path, bool restrict_vocab = true);

  void prepare(std::span<const Tokens> sentences) override;
  Matrix encode_batch(std::span<const Tokens> batch) override;
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "bow:" + path_.string(); }

  const WordVecTable& table() const { return table_; }

 private:
  std::filesystem::path path_;
  bool restrict_;
  std::size_t dim_;
  bool loaded_ = false;
  WordVecTable table_;
};

/// Looks sentences up by sentence_id() in a precomputed embedding file.
class PrecomputedEncoder final : public Encoder {
 public:
  explicit PrecomputedEncoder(std::filesystem::path path);

  Matrix encode_batch(std::span<const Tokens> batch) override;
  std::size_t dim() const override { return table_.dim; }
  std::string name() const override { return "precomputed:" + path_.string(); }

 private:
  std::filesystem::path path_;
  VectorTable table_;
};

/// Sorts sentences by token count, encodes them in chunks of `batch_size`
/// and restores the input order. Throws EncoderError when a batch comes
/// back with the wrong shape.
Matrix encode_dataset(Encoder& encoder, std::span<const Tokens> sentences, std::size_t batch_size);

struct DeterminismProbe {
  bool deterministic = true;
  double max_abs_diff = 0.0;
  std::size_t sentences = 0;
};

/// Encodes up to `limit` sentences twice and compares the results.
DeterminismProbe probe_determinism(Encoder& encoder, std::span<const Tokens> sentences,
                                   std::size_t limit = 10);

struct EncoderOptions {
  bool restrict_vocab = true;
  double subprocess_timeout_s = 120.0;
};

/// Builds an encoder from `bow:<path>`, `precomputed:<path>` or
/// `subprocess:<command>`.
std::unique_ptr<Encoder> make_encoder(std::string_view spec, const EncoderOptions& options = {});

}  // namespace embeval
