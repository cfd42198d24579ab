#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "padam/tensor.hpp"

// Deterministic synthetic classification datasets, train/test splitting,
// shuffled mini-batch iteration and delimited-text ingestion. Every generator
// is a pure function of its seed; datasets are immutable after construction.

namespace padam {

struct Dataset {
  Tensor x;                // [n, d]
  std::vector<int> labels; // n entries in [0, num_classes)
  std::size_t num_classes = 0;
  std::string name;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return x.shape.size() == 2 ? x.shape[1] : 0; }
};

struct BatchPlan {
  std::size_t batch_size = 64;
  std::uint64_t shuffle_seed = 0;
  bool drop_last = false;
};

struct Batch {
  Tensor x;
  std::vector<int> labels;
};

// Gaussian clusters with unit noise around deterministic pairwise-distinct
// centers: class c sits on axis (c mod d) at distance separation * (1 + c/d),
// so the minimum center distance scales with `separation`.
inline Dataset make_blobs(std::size_t num_classes, std::size_t per_class, std::size_t d,
                          double separation, std::uint64_t seed) {
  if (num_classes < 1 || per_class < 1 || d < 1)
    throw InvalidArgumentError("make_blobs: counts and dimension must be >= 1");
  if (!(separation >= 0.0)) throw InvalidArgumentError("make_blobs: separation must be >= 0");

  const std::size_t n = num_classes * per_class;
  Rng rng(seed);
  Dataset ds;
  ds.x = zeros({n, d});
  ds.labels.resize(n);
  ds.num_classes = num_classes;
  ds.name = "blobs";
  std::size_t row = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const std::size_t axis = c % d;
    const double center = separation * static_cast<double>(1 + c / d);
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      for (std::size_t j = 0; j < d; ++j)
        ds.x.at(row, j) = (j == axis ? center : 0.0) + rng.next_normal();
      ds.labels[row] = static_cast<int>(c);
    }
  }
  return ds;
}

// Two interleaved half-circles: class 0 on the unit circle at the origin
// (angles 0..pi), class 1 on the unit circle at (1, 0.5) reflected downward.
// Gaussian noise of the given std is added per coordinate.
inline Dataset make_two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw InvalidArgumentError("make_two_moons: n must be >= 2");
  if (!(noise >= 0.0)) throw InvalidArgumentError("make_two_moons: noise must be >= 0");

  const std::size_t n_outer = n / 2;
  const std::size_t n_inner = n - n_outer;
  Rng rng(seed);
  Dataset ds;
  ds.x = zeros({n, 2});
  ds.labels.resize(n);
  ds.num_classes = 2;
  ds.name = "two_moons";

  auto angle = [](std::size_t i, std::size_t count) {
    if (count <= 1) return 0.0;
    return std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1);
  };
  std::size_t row = 0;
  for (std::size_t i = 0; i < n_outer; ++i, ++row) {
    const double t = angle(i, n_outer);
    ds.x.at(row, 0) = std::cos(t) + noise * rng.next_normal();
    ds.x.at(row, 1) = std::sin(t) + noise * rng.next_normal();
    ds.labels[row] = 0;
  }
  for (std::size_t i = 0; i < n_inner; ++i, ++row) {
    const double t = angle(i, n_inner);
    ds.x.at(row, 0) = 1.0 - std::cos(t) + noise * rng.next_normal();
    ds.x.at(row, 1) = 0.5 - std::sin(t) + noise * rng.next_normal();
    ds.labels[row] = 1;
  }
  return ds;
}

namespace detail {

inline std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

inline Dataset take_rows(const Dataset& ds, const std::size_t* idx, std::size_t count,
                         const std::string& suffix) {
  const std::size_t d = ds.dim();
  Dataset out;
  out.x = zeros({count, d});
  out.labels.resize(count);
  out.num_classes = ds.num_classes;
  out.name = ds.name + suffix;
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t c = 0; c < d; ++c) out.x.at(r, c) = ds.x.at(idx[r], c);
    out.labels[r] = ds.labels[idx[r]];
  }
  return out;
}

}  // namespace detail

// Disjoint exhaustive partition into (train, test), deterministic in seed.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction,
                                         std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InvalidArgumentError("split: test_fraction must be in (0, 1)");
  const std::size_t n = ds.size();
  const auto n_test =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (n_test == 0 || n_test >= n)
    throw InvalidArgumentError("split: fraction " + std::to_string(test_fraction) +
                               " produces an empty split for n = " + std::to_string(n));
  Rng rng(seed);
  const auto perm = detail::permutation(n, rng);
  Dataset test = detail::take_rows(ds, perm.data(), n_test, "/test");
  Dataset train = detail::take_rows(ds, perm.data() + n_test, n - n_test, "/train");
  return {std::move(train), std::move(test)};
}

// Mini-batches for one epoch. The permutation is a pure function of
// (shuffle_seed, epoch); every sample appears exactly once, except that
// drop_last discards the truncated tail.
inline std::vector<Batch> batches(const Dataset& ds, const BatchPlan& plan, std::size_t epoch) {
  if (plan.batch_size < 1) throw InvalidArgumentError("batches: batch_size must be >= 1");
  const std::size_t n = ds.size();
  if (plan.drop_last && plan.batch_size > n)
    throw InvalidArgumentError("batches: batch_size exceeds dataset size with drop_last");
  Rng rng(mix_seed(plan.shuffle_seed, epoch));
  const auto perm = detail::permutation(n, rng);

  std::vector<Batch> out;
  for (std::size_t start = 0; start < n; start += plan.batch_size) {
    const std::size_t count = std::min(plan.batch_size, n - start);
    if (count < plan.batch_size && plan.drop_last) break;
    const Dataset rows = detail::take_rows(ds, perm.data() + start, count, "");
    out.push_back(Batch{rows.x, rows.labels});
  }
  return out;
}

// One sample per line: numeric feature columns plus one nonnegative integer
// label column (negative label_column counts from the right, -1 = last).
// skip_header drops the first line.
inline Dataset load_delimited(const std::string& path, char delimiter = ',',
                              int label_column = -1, bool skip_header = false) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open \"" + path + "\"");

  auto parse_fail = [&](std::size_t line_no, const std::string& why) {
    return ParseError(path + ":" + std::to_string(line_no) + ": " + why);
  };

  Dataset ds;
  ds.name = path;
  std::vector<double> features;
  std::vector<int> labels;
  std::size_t cols = 0, label_idx = 0, line_no = 0, rows = 0;
  int max_label = -1;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skip_header && line_no == 1) continue;
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t sep = line.find(delimiter, start);
      fields.push_back(line.substr(start, sep - start));
      if (sep == std::string::npos) break;
      start = sep + 1;
    }
    if (rows == 0) {
      cols = fields.size();
      if (cols < 2) throw parse_fail(line_no, "need at least one feature and a label column");
      const long resolved = label_column < 0 ? static_cast<long>(cols) + label_column
                                             : label_column;
      if (resolved < 0 || resolved >= static_cast<long>(cols))
        throw InvalidArgumentError("label_column " + std::to_string(label_column) +
                                   " out of range for " + std::to_string(cols) + " columns");
      label_idx = static_cast<std::size_t>(resolved);
    } else if (fields.size() != cols) {
      throw parse_fail(line_no, "expected " + std::to_string(cols) + " fields, got " +
                                    std::to_string(fields.size()));
    }

    for (std::size_t c = 0; c < cols; ++c) {
      const std::string& f = fields[c];
      if (c == label_idx) {
        int label = 0;
        const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), label);
        if (ec != std::errc() || ptr != f.data() + f.size() || label < 0)
          throw parse_fail(line_no, "label \"" + f + "\" is not a nonnegative integer");
        labels.push_back(label);
        max_label = std::max(max_label, label);
      } else {
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
        if (ec != std::errc() || ptr != f.data() + f.size())
          throw parse_fail(line_no, "feature \"" + f + "\" is not a number");
        features.push_back(value);
      }
    }
    ++rows;
  }
  if (rows == 0) throw ParseError(path + ": no data rows");

  ds.x = Tensor({rows, cols - 1}, std::move(features));
  ds.labels = std::move(labels);
  ds.num_classes = static_cast<std::size_t>(max_label) + 1;
  return ds;
}

// Standardizes both splits to the train split's per-column mean and std.
// Columns with (near-)zero variance are only centered.
inline std::pair<Dataset, Dataset> standardize(const Dataset& train, const Dataset& test) {
  const std::size_t d = train.dim(), n = train.size();
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) mean[c] += train.x.at(r, c);
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = train.x.at(r, c) - mean[c];
      sd[c] += dv * dv;
    }
  for (double& s : sd) s = std::max(std::sqrt(s / static_cast<double>(n)), 1e-12);

  auto apply = [&](const Dataset& ds) {
    Dataset out = ds;
    for (std::size_t r = 0; r < ds.size(); ++r)
      for (std::size_t c = 0; c < d; ++c) out.x.at(r, c) = (ds.x.at(r, c) - mean[c]) / sd[c];
    return out;
  };
  return {apply(train), apply(test)};
}

}  // namespace padam
