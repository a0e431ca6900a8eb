#pragma once

// In-process encoders for tests.

#include <cstdlib>
#include <string>
#include <vector>

#include "embeval/encoders.hpp"

namespace stubs {

/// Row = (t0, t1, ..., t_{d-1}) where t_j is token j parsed as a number, or
/// 0 when the token is missing or not numeric. Records every batch it sees.
class NumericEncoder final : public embeval::Encoder {
 public:
  explicit NumericEncoder(std::size_t dim) : dim_(dim) {}

  embeval::Matrix encode_batch(std::span<const embeval::Tokens> batch) override {
    batches.emplace_back(batch.begin(), batch.end());
    embeval::Matrix out(batch.size(), dim_);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t j = 0; j < dim_ && j < batch[i].size(); ++j) {
        out(i, j) = std::strtod(batch[i][j].c_str(), nullptr);
      }
    }
    return out;
  }
  void prepare(std::span<const embeval::Tokens> sentences) override { prepared += sentences.size(); }
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "numeric"; }

  std::vector<std::vector<embeval::Tokens>> batches;
  std::size_t prepared = 0;

 private:
  std::size_t dim_;
};

/// Returns a different vector on every call for the same sentence.
class DriftingEncoder final : public embeval::Encoder {
 public:
  embeval::Matrix encode_batch(std::span<const embeval::Tokens> batch) override {
    embeval::Matrix out(batch.size(), 2, 1.0);
    for (std::size_t i = 0; i < batch.size(); ++i) out(i, 1) = static_cast<double>(++calls_);
    return out;
  }
  std::size_t dim() const override { return 2; }
  std::string name() const override { return "drifting"; }

 private:
  std::size_t calls_ = 0;
};

/// Declares one dimension but returns another.
class LyingEncoder final : public embeval::Encoder {
 public:
  embeval::Matrix encode_batch(std::span<const embeval::Tokens> batch) override {
    return embeval::Matrix(batch.size(), 3, 1.0);
  }
  std::size_t dim() const override { return 4; }
  std::string name() const override { return "lying"; }
};

}  // namespace stubs
