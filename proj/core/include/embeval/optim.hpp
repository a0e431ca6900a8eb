#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "embeval/matrix.hpp"

namespace embeval {

enum class OptimKind { adam, rmsprop };

OptimKind parse_optim(std::string_view name);
std::string_view to_string(OptimKind kind);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment buffers for one parameter tensor.
struct AdamState {
  explicit AdamState(std::size_t size, AdamOptions options = {});

  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  AdamOptions options;
};

struct RmspropOptions {
  double lr = 1e-3;
  double decay = 0.9;
  double eps = 1e-8;
};

struct RmspropState {
  explicit RmspropState(std::size_t size, RmspropOptions options = {});

  std::vector<double> sq;
  RmspropOptions options;
};

/// One bias-corrected Adam update. Throws ShapeError if the buffers,
/// parameters and gradients differ in length.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);
void adam_step(AdamState& state, Matrix& params, const Matrix& grads);

/// sq <- decay*sq + (1-decay)*g^2;  p <- p - lr*g/(sqrt(sq)+eps)
void rmsprop_step(RmspropState& state, std::span<double> params, std::span<const double> grads);
void rmsprop_step(RmspropState& state, Matrix& params, const Matrix& grads);

/// Per-tensor optimizer states for a model with several parameter blocks.
/// Slot i always refers to the i-th block passed at construction.
class Optimizer {
 public:
  Optimizer(OptimKind kind, double lr, std::span<const std::size_t> block_sizes);

  void step(std::size_t slot, std::span<double> params, std::span<const double> grads);

  OptimKind kind() const noexcept { return kind_; }

 private:
  OptimKind kind_;
  std::variant<std::vector<AdamState>, std::vector<RmspropState>> states_;
};

}  // namespace embeval
