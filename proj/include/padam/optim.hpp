#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "padam/tensor.hpp"

// Update rules: Padam, Adam, Amsgrad and SGD with momentum behind one
// interface. All steps are pure: inputs are never mutated, fresh params and
// state come back.
//
// Padam's denominator is (sqrt(vhat) + eps)^(2p). Since vhat estimates the
// second moment, vhat^p equals (sqrt(vhat))^(2p), so the partially adaptive
// exponent p in [0, 0.5] spans the identity denominator (p = 0, pure
// bias-corrected momentum) through the full Amsgrad denominator
// sqrt(vhat) + eps (p = 0.5). Keeping eps inside the power makes both
// endpoint reductions exact:
//   padam_step(p = 0.5) == amsgrad_step   bitwise, and
//   padam_step(p = 0, eps = 0) moves params by exactly -lr * mhat.
//
// The second moment is bias-corrected BEFORE the running max, and state
// stores the raw m and v (corrections are recomputed from the step counter),
// plus the clamped vhat. Note that the original Amsgrad formulation clamps
// the uncorrected v instead; correcting first makes the early clamp values
// larger (they are divided by 1 - beta2^t < 1). Only this ordering is
// implemented. Weight decay is coupled L2: g <- g + wd * params before the
// moment updates, for all four rules.
//
// A coordinate whose first moment is exactly zero takes a zero step. This
// only matters for an all-zero gradient history with eps = 0, where the
// denominator would otherwise also be zero.

namespace padam {

struct HyperParams {
  double alpha0 = 0.001;      // base step size (schedules produce the per-epoch lr)
  double beta1 = 0.9;         // first-moment decay, [0, 1)
  double beta2 = 0.999;       // second-moment decay, [0, 1)
  double p = 0.125;           // partial adaptivity, [0, 0.5]
  double epsilon = 1e-8;      // stability constant, >= 0
  double weight_decay = 0.0;  // coupled L2 coefficient, >= 0
  double momentum = 0.0;      // classical momentum (SGD only), [0, 1)
};

inline void validate_hyperparams(const HyperParams& hp) {
  if (!(hp.beta1 >= 0.0 && hp.beta1 < 1.0))
    throw InvalidArgumentError("invalid hyperparameter: beta1 must be in [0,1), got " +
                               std::to_string(hp.beta1));
  if (!(hp.beta2 >= 0.0 && hp.beta2 < 1.0))
    throw InvalidArgumentError("invalid hyperparameter: beta2 must be in [0,1), got " +
                               std::to_string(hp.beta2));
  if (!(hp.p >= 0.0 && hp.p <= 0.5))
    throw InvalidArgumentError("invalid hyperparameter: p must be in [0, 0.5], got " +
                               std::to_string(hp.p));
  if (!(hp.epsilon >= 0.0))
    throw InvalidArgumentError("invalid hyperparameter: epsilon must be >= 0");
  if (!(hp.weight_decay >= 0.0))
    throw InvalidArgumentError("invalid hyperparameter: weight_decay must be >= 0");
  if (!(hp.momentum >= 0.0 && hp.momentum < 1.0))
    throw InvalidArgumentError("invalid hyperparameter: momentum must be in [0,1)");
}

// Per-block state for the adaptive rules. m and v are stored raw; vhat is the
// running max of the bias-corrected v and never decreases elementwise.
struct MomentState {
  Tensor m;
  Tensor v;
  Tensor vhat;
  std::int64_t t = 0;
};

inline MomentState make_moment_state(const Shape& shape) {
  return MomentState{zeros(shape), zeros(shape), zeros(shape), 0};
}

struct SgdState {
  Tensor velocity;
  std::int64_t t = 0;
};

inline SgdState make_sgd_state(const Shape& shape) {
  return SgdState{zeros(shape), 0};
}

namespace detail {

inline void check_step_inputs(const Tensor& params, const Tensor& grads, double lr_t) {
  require_same_shape(params, grads, "optimizer step");
  if (!(lr_t > 0.0))
    throw InvalidArgumentError("optimizer step: lr_t must be > 0, got " + std::to_string(lr_t));
  if (!all_finite(grads)) throw NonFiniteError("optimizer step: non-finite gradient input");
}

enum class AdaptiveDenom {
  PartialPower,   // (sqrt(vhat) + eps)^(2p), clamped
  SqrtClamped,    // sqrt(vhat) + eps, clamped (Amsgrad)
  SqrtUnclamped,  // sqrt(vcorr) + eps, no clamp (Adam)
};

inline std::pair<Tensor, MomentState> adaptive_step(const Tensor& params, const Tensor& grads,
                                                    const MomentState& state,
                                                    const HyperParams& hp, double lr_t,
                                                    AdaptiveDenom mode) {
  check_step_inputs(params, grads, lr_t);
  require_same_shape(params, state.m, "optimizer step (state m)");
  require_same_shape(params, state.v, "optimizer step (state v)");
  require_same_shape(params, state.vhat, "optimizer step (state vhat)");
  validate_hyperparams(hp);

  const std::int64_t t = state.t + 1;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(t));
  const double q = 2.0 * hp.p;

  const Tensor g = map2(grads, params,
                        [&](double gi, double pi) { return gi + hp.weight_decay * pi; });

  MomentState next;
  next.t = t;
  next.m = map2(state.m, g, [&](double m, double gi) {
    return hp.beta1 * m + (1.0 - hp.beta1) * gi;
  });
  next.v = map2(state.v, g, [&](double v, double gi) {
    return hp.beta2 * v + (1.0 - hp.beta2) * gi * gi;
  });
  const Tensor vcorr = map(next.v, [&](double v) { return v / bc2; });

  Tensor denom;
  if (mode == AdaptiveDenom::SqrtUnclamped) {
    next.vhat = state.vhat;
    denom = map(vcorr, [&](double v) { return std::sqrt(v) + hp.epsilon; });
  } else {
    next.vhat = map2(state.vhat, vcorr, [](double a, double b) { return std::max(a, b); });
    if (mode == AdaptiveDenom::SqrtClamped || q == 1.0) {
      denom = map(next.vhat, [&](double v) { return std::sqrt(v) + hp.epsilon; });
    } else if (q == 0.0) {
      denom = full(params.shape, 1.0);
    } else {
      denom = map(next.vhat, [&](double v) { return std::pow(std::sqrt(v) + hp.epsilon, q); });
    }
  }

  Tensor new_params = params;
  for (std::size_t i = 0; i < new_params.size(); ++i) {
    const double m = next.m[i];
    if (m == 0.0) continue;  // zero step, see header comment
    new_params[i] -= lr_t * (m / bc1) / denom[i];
  }
  return {std::move(new_params), std::move(next)};
}

}  // namespace detail

inline std::pair<Tensor, MomentState> padam_step(const Tensor& params, const Tensor& grads,
                                                 const MomentState& state,
                                                 const HyperParams& hp, double lr_t) {
  return detail::adaptive_step(params, grads, state, hp, lr_t,
                               detail::AdaptiveDenom::PartialPower);
}

inline std::pair<Tensor, MomentState> amsgrad_step(const Tensor& params, const Tensor& grads,
                                                   const MomentState& state,
                                                   const HyperParams& hp, double lr_t) {
  return detail::adaptive_step(params, grads, state, hp, lr_t,
                               detail::AdaptiveDenom::SqrtClamped);
}

inline std::pair<Tensor, MomentState> adam_step(const Tensor& params, const Tensor& grads,
                                                const MomentState& state, const HyperParams& hp,
                                                double lr_t) {
  return detail::adaptive_step(params, grads, state, hp, lr_t,
                               detail::AdaptiveDenom::SqrtUnclamped);
}

inline std::pair<Tensor, SgdState> sgd_momentum_step(const Tensor& params, const Tensor& grads,
                                                     const SgdState& state,
                                                     const HyperParams& hp, double lr_t) {
  detail::check_step_inputs(params, grads, lr_t);
  require_same_shape(params, state.velocity, "optimizer step (state velocity)");
  validate_hyperparams(hp);

  const Tensor g = map2(grads, params,
                        [&](double gi, double pi) { return gi + hp.weight_decay * pi; });
  SgdState next;
  next.t = state.t + 1;
  next.velocity = map2(state.velocity, g,
                       [&](double v, double gi) { return hp.momentum * v + gi; });
  Tensor new_params = map2(params, next.velocity,
                           [&](double pi, double v) { return pi - lr_t * v; });
  return {std::move(new_params), std::move(next)};
}

enum class OptimizerKind { Padam, Adam, Amsgrad, Sgd };

inline const std::vector<std::string>& optimizer_names() {
  static const std::vector<std::string> names = {"padam", "adam", "amsgrad", "sgd"};
  return names;
}

inline std::string optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Padam: return "padam";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Amsgrad: return "amsgrad";
    case OptimizerKind::Sgd: return "sgd";
  }
  return "?";
}

inline OptimizerKind optimizer_kind_from_name(std::string_view name) {
  if (name == "padam") return OptimizerKind::Padam;
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "amsgrad") return OptimizerKind::Amsgrad;
  if (name == "sgd") return OptimizerKind::Sgd;
  throw ConfigError("unknown optimizer \"" + std::string(name) +
                    "\": valid names are padam, adam, amsgrad, sgd");
}

// Stock presets per optimizer (lr 0.1 / wd 5e-4 for padam and sgd with
// p = 0.125 and momentum 0.9; lr 1e-3 / beta2 0.99 / wd 1e-4 for adam and
// amsgrad).
inline HyperParams default_hyperparams(OptimizerKind kind) {
  HyperParams hp;
  switch (kind) {
    case OptimizerKind::Padam:
      hp.alpha0 = 0.1;
      hp.beta1 = 0.9;
      hp.beta2 = 0.999;
      hp.p = 0.125;
      hp.weight_decay = 0.0005;
      hp.momentum = 0.0;
      break;
    case OptimizerKind::Sgd:
      hp.alpha0 = 0.1;
      hp.weight_decay = 0.0005;
      hp.momentum = 0.9;
      hp.p = 0.0;
      break;
    case OptimizerKind::Adam:
    case OptimizerKind::Amsgrad:
      hp.alpha0 = 0.001;
      hp.beta1 = 0.9;
      hp.beta2 = 0.99;
      hp.p = 0.5;
      hp.weight_decay = 0.0001;
      hp.momentum = 0.0;
      break;
  }
  return hp;
}

// Fields left unset fall back to the optimizer's preset.
struct HyperParamOverrides {
  std::optional<double> alpha0;
  std::optional<double> beta1;
  std::optional<double> beta2;
  std::optional<double> p;
  std::optional<double> epsilon;
  std::optional<double> weight_decay;
  std::optional<double> momentum;
};

using OptState = std::variant<MomentState, SgdState>;

inline OptState init_opt_state(OptimizerKind kind, const Shape& shape) {
  if (kind == OptimizerKind::Sgd) return make_sgd_state(shape);
  return make_moment_state(shape);
}

// Immutable dispatch handle: a kind plus fully resolved hyperparameters.
struct Optimizer {
  OptimizerKind kind = OptimizerKind::Padam;
  HyperParams hp;

  std::string name() const { return optimizer_name(kind); }

  std::pair<Tensor, OptState> step(const Tensor& params, const Tensor& grads,
                                   const OptState& state, double lr_t) const {
    switch (kind) {
      case OptimizerKind::Padam: {
        auto [np, ns] = padam_step(params, grads, std::get<MomentState>(state), hp, lr_t);
        return {std::move(np), OptState(std::move(ns))};
      }
      case OptimizerKind::Adam: {
        auto [np, ns] = adam_step(params, grads, std::get<MomentState>(state), hp, lr_t);
        return {std::move(np), OptState(std::move(ns))};
      }
      case OptimizerKind::Amsgrad: {
        auto [np, ns] = amsgrad_step(params, grads, std::get<MomentState>(state), hp, lr_t);
        return {std::move(np), OptState(std::move(ns))};
      }
      case OptimizerKind::Sgd: {
        auto [np, ns] = sgd_momentum_step(params, grads, std::get<SgdState>(state), hp, lr_t);
        return {std::move(np), OptState(std::move(ns))};
      }
    }
    throw InvalidArgumentError("optimizer step: bad kind");
  }
};

inline Optimizer make_optimizer(std::string_view name, const HyperParamOverrides& o = {}) {
  const OptimizerKind kind = optimizer_kind_from_name(name);
  HyperParams hp = default_hyperparams(kind);
  if (o.alpha0) hp.alpha0 = *o.alpha0;
  if (o.beta1) hp.beta1 = *o.beta1;
  if (o.beta2) hp.beta2 = *o.beta2;
  if (o.p) hp.p = *o.p;
  if (o.epsilon) hp.epsilon = *o.epsilon;
  if (o.weight_decay) hp.weight_decay = *o.weight_decay;
  if (o.momentum) hp.momentum = *o.momentum;
  validate_hyperparams(hp);
  return Optimizer{kind, hp};
}

}  // namespace padam
