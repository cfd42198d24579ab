#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "padam/tensor.hpp"

// Desk-scale differentiable models with exact manual backpropagation:
// multinomial logistic regression and a two-layer tanh MLP, trained with
// softmax cross-entropy (mean over the batch). Includes top-k error metrics
// and a central finite-difference gradient checker.

namespace padam {

enum class ModelKind { LogReg, Mlp };

inline std::string model_kind_name(ModelKind k) {
  return k == ModelKind::LogReg ? "logreg" : "mlp";
}

inline ModelKind model_kind_from_name(const std::string& name) {
  if (name == "logreg") return ModelKind::LogReg;
  if (name == "mlp") return ModelKind::Mlp;
  throw ConfigError("unknown model \"" + name + "\": valid kinds are logreg, mlp");
}

struct ModelSpec {
  ModelKind kind = ModelKind::Mlp;
  std::size_t input_dim = 2;
  std::size_t hidden_dim = 16;  // mlp only
  std::size_t num_classes = 2;
  std::uint64_t init_seed = 0;
  double init_scale = 1.0;  // std of the Gaussian weight init
};

inline void validate_model_spec(const ModelSpec& spec) {
  if (spec.input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
  if (spec.kind == ModelKind::Mlp && spec.hidden_dim < 1)
    throw ConfigError("model: hidden_dim must be >= 1");
  if (spec.num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  if (!(spec.init_scale >= 0.0)) throw ConfigError("model: init_scale must be >= 0");
}

struct ParamBlock {
  std::string name;
  Tensor value;
};

struct ModelParams {
  std::vector<ParamBlock> blocks;
};

// Mean gradients over a mini-batch; mirrors the ModelParams block structure.
struct BatchGrads {
  std::vector<ParamBlock> blocks;
};

// Weights ~ Normal(0, init_scale) drawn in block order from init_seed;
// biases zero.
inline ModelParams init_params(const ModelSpec& spec) {
  validate_model_spec(spec);
  Rng rng(spec.init_seed);
  ModelParams params;
  if (spec.kind == ModelKind::LogReg) {
    params.blocks.push_back(
        {"W", rng_normal(rng, {spec.input_dim, spec.num_classes}, 0.0, spec.init_scale)});
    params.blocks.push_back({"b", zeros({spec.num_classes})});
  } else {
    params.blocks.push_back(
        {"W1", rng_normal(rng, {spec.input_dim, spec.hidden_dim}, 0.0, spec.init_scale)});
    params.blocks.push_back({"b1", zeros({spec.hidden_dim})});
    params.blocks.push_back(
        {"W2", rng_normal(rng, {spec.hidden_dim, spec.num_classes}, 0.0, spec.init_scale)});
    params.blocks.push_back({"b2", zeros({spec.num_classes})});
  }
  return params;
}

namespace detail {

// out[n, cols] = x[n, rows] * W[rows, cols] + b[cols]
inline Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t n = x.shape[0], in = x.shape[1], out_dim = w.shape[1];
  if (w.shape[0] != in)
    throw ShapeError("affine: input width " + std::to_string(in) + " does not match weight " +
                     shape_str(w.shape));
  Tensor out = zeros({n, out_dim});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < in; ++k) {
      const double xv = x.at(r, k);
      if (xv == 0.0) continue;
      for (std::size_t c = 0; c < out_dim; ++c) out.at(r, c) += xv * w.at(k, c);
    }
    for (std::size_t c = 0; c < out_dim; ++c) out.at(r, c) += b[c];
  }
  return out;
}

// Row-wise softmax with max subtraction.
inline Tensor softmax_rows(const Tensor& logits) {
  const std::size_t n = logits.shape[0], k = logits.shape[1];
  Tensor probs = zeros({n, k});
  for (std::size_t r = 0; r < n; ++r) {
    double mx = logits.at(r, 0);
    for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, logits.at(r, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double e = std::exp(logits.at(r, c) - mx);
      probs.at(r, c) = e;
      sum += e;
    }
    for (std::size_t c = 0; c < k; ++c) probs.at(r, c) /= sum;
  }
  return probs;
}

inline void check_input(const ModelSpec& spec, const Tensor& x) {
  if (x.shape.size() != 2)
    throw ShapeError("model input must be 2-d [batch, features], got " + shape_str(x.shape));
  if (x.shape[1] != spec.input_dim)
    throw ShapeError("model input has " + std::to_string(x.shape[1]) + " features, expected " +
                     std::to_string(spec.input_dim));
}

inline void check_batch(const ModelSpec& spec, const Tensor& x, const std::vector<int>& labels) {
  check_input(spec, x);
  if (labels.size() != x.shape[0])
    throw ShapeError("label count " + std::to_string(labels.size()) + " does not match batch " +
                     std::to_string(x.shape[0]));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= spec.num_classes)
      throw InvalidArgumentError("invalid label " + std::to_string(labels[i]) + " at row " +
                                 std::to_string(i) + " (num_classes = " +
                                 std::to_string(spec.num_classes) + ")");
  }
}

inline const Tensor& block(const ModelParams& p, std::size_t i) { return p.blocks[i].value; }

}  // namespace detail

inline Tensor forward(const ModelSpec& spec, const ModelParams& params, const Tensor& x) {
  detail::check_input(spec, x);
  if (spec.kind == ModelKind::LogReg) {
    return detail::affine(x, detail::block(params, 0), detail::block(params, 1));
  }
  Tensor h = map(detail::affine(x, detail::block(params, 0), detail::block(params, 1)),
                 [](double z) { return std::tanh(z); });
  return detail::affine(h, detail::block(params, 2), detail::block(params, 3));
}

struct LossGrads {
  double loss = 0.0;
  BatchGrads grads;
};

// Mean softmax cross-entropy and its exact gradients for every block. The
// per-sample loss is -log(prob[label]); a confidently wrong prediction whose
// probability underflows to zero therefore surfaces as +inf, which is how a
// diverged run becomes observable upstream.
inline LossGrads loss_and_grads(const ModelSpec& spec, const ModelParams& params,
                                const Tensor& x, const std::vector<int>& labels) {
  detail::check_batch(spec, x, labels);
  const std::size_t n = x.shape[0], k = spec.num_classes;

  const bool mlp = spec.kind == ModelKind::Mlp;
  Tensor h;  // tanh activations, mlp only
  Tensor logits;
  if (mlp) {
    h = map(detail::affine(x, detail::block(params, 0), detail::block(params, 1)),
            [](double z) { return std::tanh(z); });
    logits = detail::affine(h, detail::block(params, 2), detail::block(params, 3));
  } else {
    logits = detail::affine(x, detail::block(params, 0), detail::block(params, 1));
  }

  const Tensor probs = detail::softmax_rows(logits);
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    loss -= std::log(probs.at(r, static_cast<std::size_t>(labels[r])));
  loss /= static_cast<double>(n);

  // dlogits = (probs - onehot) / n
  Tensor dlogits = probs;
  for (std::size_t r = 0; r < n; ++r)
    dlogits.at(r, static_cast<std::size_t>(labels[r])) -= 1.0;
  for (double& v : dlogits.data) v /= static_cast<double>(n);

  auto matmul_at = [](const Tensor& a, const Tensor& b) {  // a^T * b
    const std::size_t rows = a.shape[1], inner = a.shape[0], cols = b.shape[1];
    Tensor out = zeros({rows, cols});
    for (std::size_t i = 0; i < inner; ++i)
      for (std::size_t r = 0; r < rows; ++r) {
        const double av = a.at(i, r);
        if (av == 0.0) continue;
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += av * b.at(i, c);
      }
    return out;
  };
  auto col_sum = [](const Tensor& a) {
    Tensor out = zeros({a.shape[1]});
    for (std::size_t r = 0; r < a.shape[0]; ++r)
      for (std::size_t c = 0; c < a.shape[1]; ++c) out[c] += a.at(r, c);
    return out;
  };

  LossGrads result;
  result.loss = loss;
  if (!mlp) {
    result.grads.blocks.push_back({"W", matmul_at(x, dlogits)});
    result.grads.blocks.push_back({"b", col_sum(dlogits)});
    return result;
  }

  const Tensor& w2 = detail::block(params, 2);
  Tensor dh = zeros(h.shape);  // dlogits * W2^T
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < k; ++c) {
      const double dv = dlogits.at(r, c);
      if (dv == 0.0) continue;
      for (std::size_t j = 0; j < spec.hidden_dim; ++j) dh.at(r, j) += dv * w2.at(j, c);
    }
  const Tensor dz = map2(dh, h, [](double d, double hv) { return d * (1.0 - hv * hv); });

  result.grads.blocks.push_back({"W1", matmul_at(x, dz)});
  result.grads.blocks.push_back({"b1", col_sum(dz)});
  result.grads.blocks.push_back({"W2", matmul_at(h, dlogits)});
  result.grads.blocks.push_back({"b2", col_sum(dlogits)});
  return result;
}

// Max over all coordinates of the relative difference between analytic and
// central finite-difference gradients; 0 for a parameterless model.
inline double grad_check(const ModelSpec& spec, const ModelParams& params, const Tensor& x,
                         const std::vector<int>& labels, double h) {
  if (!(h > 0.0)) throw InvalidArgumentError("grad_check: h must be > 0");
  if (params.blocks.empty()) return 0.0;  // empty max
  const LossGrads analytic = loss_and_grads(spec, params, x, labels);
  ModelParams probe = params;
  double worst = 0.0;
  for (std::size_t bi = 0; bi < probe.blocks.size(); ++bi) {
    Tensor& t = probe.blocks[bi].value;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double orig = t[i];
      t[i] = orig + h;
      const double up = loss_and_grads(spec, probe, x, labels).loss;
      t[i] = orig - h;
      const double down = loss_and_grads(spec, probe, x, labels).loss;
      t[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.grads.blocks[bi].value[i];
      const double rel = std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

struct EvalResult {
  double loss = 0.0;
  std::vector<double> error_at;  // one entry per requested k
};

// error@k = fraction of rows whose true label is not among the k largest
// logits; ties resolve toward the lowest class index.
inline EvalResult evaluate(const ModelSpec& spec, const ModelParams& params, const Tensor& x,
                           const std::vector<int>& labels, const std::vector<std::size_t>& ks) {
  detail::check_batch(spec, x, labels);
  for (std::size_t k : ks) {
    if (k < 1 || k > spec.num_classes)
      throw InvalidArgumentError("evaluate: k = " + std::to_string(k) +
                                 " out of range [1, " + std::to_string(spec.num_classes) + "]");
  }
  const Tensor logits = forward(spec, params, x);
  const Tensor probs = detail::softmax_rows(logits);
  const std::size_t n = x.shape[0], kk = spec.num_classes;

  EvalResult result;
  for (std::size_t r = 0; r < n; ++r)
    result.loss -= std::log(probs.at(r, static_cast<std::size_t>(labels[r])));
  result.loss /= static_cast<double>(n);

  std::vector<std::size_t> ranks(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto label = static_cast<std::size_t>(labels[r]);
    const double lv = logits.at(r, label);
    std::size_t rank = 0;
    for (std::size_t c = 0; c < kk; ++c) {
      if (logits.at(r, c) > lv || (logits.at(r, c) == lv && c < label)) ++rank;
    }
    ranks[r] = rank;
  }
  for (std::size_t k : ks) {
    std::size_t misses = 0;
    for (std::size_t r = 0; r < n; ++r)
      if (ranks[r] >= k) ++misses;
    result.error_at.push_back(static_cast<double>(misses) / static_cast<double>(n));
  }
  return result;
}

}  // namespace padam
