#include "embeval/optim.hpp"

#include <cmath>
#include <string>

#include "embeval/error.hpp"

namespace embeval {

namespace {

void check_sizes(std::size_t buffer, std::size_t params, std::size_t grads, const char* who) {
  if (buffer != params || params != grads) {
    throw ShapeError(std::string(who) + ": state/params/grads sizes differ (" +
                     std::to_string(buffer) + ", " + std::to_string(params) + ", " +
                     std::to_string(grads) + ")");
  }
}

}  // namespace

OptimKind parse_optim(std::string_view name) {
  if (name == "adam") return OptimKind::adam;
  if (name == "rmsprop") return OptimKind::rmsprop;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected adam or rmsprop)");
}

std::string_view to_string(OptimKind kind) {
  return kind == OptimKind::adam ? "adam" : "rmsprop";
}

AdamState::AdamState(std::size_t size, AdamOptions opts)
    : m(size, 0.0), v(size, 0.0), options(opts) {}

RmspropState::RmspropState(std::size_t size, RmspropOptions opts)
    : sq(size, 0.0), options(opts) {}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  check_sizes(state.m.size(), params.size(), grads.size(), "adam_step");
  const auto& o = state.options;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = o.beta1 * state.m[i] + (1.0 - o.beta1) * g;
    state.v[i] = o.beta2 * state.v[i] + (1.0 - o.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
  }
}

void adam_step(AdamState& state, Matrix& params, const Matrix& grads) {
  if (!params.same_shape(grads)) throw ShapeError("adam_step: params and grads shapes differ");
  adam_step(state, params.values(), grads.values());
}

void rmsprop_step(RmspropState& state, std::span<double> params, std::span<const double> grads) {
  check_sizes(state.sq.size(), params.size(), grads.size(), "rmsprop_step");
  const auto& o = state.options;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.sq[i] = o.decay * state.sq[i] + (1.0 - o.decay) * g * g;
    params[i] -= o.lr * g / (std::sqrt(state.sq[i]) + o.eps);
  }
}

void rmsprop_step(RmspropState& state, Matrix& params, const Matrix& grads) {
  if (!params.same_shape(grads)) throw ShapeError("rmsprop_step: params and grads shapes differ");
  rmsprop_step(state, params.values(), grads.values());
}

Optimizer::Optimizer(OptimKind kind, double lr, std::span<const std::size_t> block_sizes)
    : kind_(kind) {
  if (kind == OptimKind::adam) {
    std::vector<AdamState> states;
    AdamOptions opts;
    opts.lr = lr;
    for (std::size_t n : block_sizes) states.emplace_back(n, opts);
    states_ = std::move(states);
  } else {
    std::vector<RmspropState> states;
    RmspropOptions opts;
    opts.lr = lr;
    for (std::size_t n : block_sizes) states.emplace_back(n, opts);
    states_ = std::move(states);
  }
}

void Optimizer::step(std::size_t slot, std::span<double> params, std::span<const double> grads) {
  std::visit(
      [&](auto& states) {
        if (slot >= states.size()) throw ShapeError("optimizer slot out of range");
        if constexpr (std::is_same_v<std::decay_t<decltype(states)>, std::vector<AdamState>>) {
          adam_step(states[slot], params, grads);
        } else {
          rmsprop_step(states[slot], params, grads);
        }
      },
      states_);
}

}  // namespace embeval
