#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace embeval {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Rows are sentence vectors, class
/// weights or projections depending on context.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(double value);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Rows of `source` selected by `indices`, in that order.
Matrix gather_rows(const Matrix& source, std::span<const std::size_t> indices);

/// Horizontal concatenation [a | b].
Matrix hconcat(const Matrix& a, const Matrix& b);

/// X · Wᵀ + b, where X is n×d, W is m×d and b has length m (or is empty).
Matrix affine(const Matrix& x, const Matrix& w, std::span<const double> b);

/// Row-wise softmax in place, max-shifted.
void softmax_rows(Matrix& logits);

/// softmax(X · Wᵀ + b): class probabilities, one row per sample.
Matrix affine_softmax(const Matrix& w, std::span<const double> b, const Matrix& x);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
double squared_norm(std::span<const double> a);

/// Cosine similarity; throws ShapeError on length mismatch and
/// MetricError when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

/// Returns a copy with each row scaled to unit L2 norm. Zero rows stay zero.
Matrix normalize_rows(const Matrix& m);

bool all_finite(std::span<const double> values);

}  // namespace embeval
