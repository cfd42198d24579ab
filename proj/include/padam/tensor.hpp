#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "padam/errors.hpp"

namespace padam {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

inline std::size_t shape_numel(const Shape& shape) {
  if (shape.empty()) throw ShapeError("invalid shape: empty dimension list");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("invalid shape " + shape_str(shape) + ": zero dimension");
    n *= d;
  }
  return n;
}

// Dense row-major array of doubles. Operations return fresh tensors; a tensor
// handed out by this library is never mutated afterwards, so sharing across
// threads read-only is safe.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(Shape shape_, std::vector<double> data_)
      : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_numel(shape) != data.size())
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
  }

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  // (row, col) access for 2-d tensors.
  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
  }
};

inline Tensor zeros(const Shape& shape) {
  return Tensor(shape, std::vector<double>(shape_numel(shape), 0.0));
}

inline Tensor full(const Shape& shape, double value) {
  return Tensor(shape, std::vector<double>(shape_numel(shape), value));
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape != b.shape) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape) +
                     " vs " + shape_str(b.shape));
  }
}

template <class F>
inline Tensor map(const Tensor& a, F f) {
  Tensor out;
  out.shape = a.shape;
  out.data.reserve(a.size());
  for (double x : a.data) out.data.push_back(f(x));
  return out;
}

// Elementwise zip of two same-shape tensors; the engine behind the update rules.
template <class F>
inline Tensor map2(const Tensor& a, const Tensor& b, F f) {
  require_same_shape(a, b, "map2");
  Tensor out;
  out.shape = a.shape;
  out.data.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.data.push_back(f(a[i], b[i]));
  return out;
}

// Elementwise power with the convention 0^0 = 1, so a zero exponent always
// yields an identity denominator.
inline Tensor elem_pow(const Tensor& a, double q) {
  const bool q_integral = q == std::floor(q);
  return map(a, [&](double x) {
    if (x < 0.0 && !q_integral) {
      throw DomainError("elem_pow: negative base " + std::to_string(x) +
                        " with fractional exponent " + std::to_string(q));
    }
    return std::pow(x, q);  // IEEE pow(0,0) == 1
  });
}

inline bool all_finite(const Tensor& a) {
  for (double x : a.data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Deterministic random number generator: xoshiro256++ seeded via splitmix64.
// The same seed produces the same value stream on every run and platform
// (the uniform integer stream is integer-exact; normals go through
// Box-Muller, each consuming exactly two uniforms).
//
// Single-owner: never share one Rng between concurrent consumers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = detail::splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // Uniform in (0, 1]: 53-bit mantissa, never zero so log() is safe.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double next_normal() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, bound) by rejection, no modulo bias.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw InvalidArgumentError("Rng::next_below: bound must be positive");
    const std::uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  std::uint64_t state_[4];
};

// Derives an independent sub-seed for a named stream (data, init, shuffle, ...).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed + stream * 0x9E3779B97F4A7C15ULL;
  return detail::splitmix64(s);
}

inline Tensor rng_normal(Rng& rng, const Shape& shape, double mean, double stddev) {
  if (!(stddev >= 0.0)) {
    throw InvalidArgumentError("rng_normal: stddev must be >= 0, got " + std::to_string(stddev));
  }
  Tensor out;
  out.shape = shape;
  const std::size_t n = shape_numel(shape);
  out.data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.data.push_back(mean + stddev * rng.next_normal());
  return out;
}

}  // namespace padam
