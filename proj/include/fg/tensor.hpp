// Copyright (c) 2026 The fginfer Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fg {

/// Reduction mode for marginalizing tensor axes: log-sum-exp (sum-product
/// semantics in log space) or max (max-product semantics).
enum class Reduce { logsumexp, max };

/// n-dimensional real array in row-major order. shape holds one cardinality
/// per axis; rank 0 (empty shape) is a scalar with one data entry. Values are
/// log-space potentials, messages or plain reals depending on context; the
/// container itself is untyped.
struct DenseTensor {
  std::vector<int> shape;
  std::vector<double> data;

  DenseTensor() : data(1, 0.0) {}
  DenseTensor(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<std::int64_t>(data.size()) != size_of(shape))
      throw std::invalid_argument("DenseTensor: data length != product of shape");
  }

  static std::int64_t size_of(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int c : shape) {
      if (c <= 0) throw std::invalid_argument("DenseTensor: non-positive axis size");
      n *= c;
    }
    return n;
  }

  static DenseTensor zeros(std::vector<int> shape) {
    std::int64_t n = size_of(shape);
    return DenseTensor(std::move(shape), std::vector<double>(std::size_t(n), 0.0));
  }

  static DenseTensor scalar(double v) { return DenseTensor({}, {v}); }

  static DenseTensor vector(std::vector<double> v) {
    int n = int(v.size());
    return DenseTensor({n}, std::move(v));
  }

  int rank() const { return int(shape.size()); }
  std::int64_t size() const { return std::int64_t(data.size()); }
  bool is_scalar() const { return shape.empty(); }
  double scalar_value() const { return data[0]; }

  /// Row-major strides; stride of the last axis is 1.
  std::vector<std::int64_t> strides() const {
    std::vector<std::int64_t> s(shape.size(), 1);
    for (int k = rank() - 2; k >= 0; --k) s[k] = s[k + 1] * shape[k + 1];
    return s;
  }

  std::int64_t flat_index(std::span<const int> idx) const {
    std::int64_t f = 0;
    for (int k = 0; k < rank(); ++k) f = f * shape[k] + idx[k];
    return f;
  }

  double at(std::span<const int> idx) const { return data[std::size_t(flat_index(idx))]; }
  double& at(std::span<const int> idx) { return data[std::size_t(flat_index(idx))]; }
};

inline bool same_shape(const DenseTensor& a, const DenseTensor& b) {
  return a.shape == b.shape;
}

/// Stable log-sum-exp of a range: max + ln(sum exp(x - max)). Returns -inf
/// for an all -inf range; accumulation order is the range order.
inline double logsumexp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// Outer sum of K vectors: out shape (|v1|, ..., |vK|) with
/// out(i1,...,iK) = v1[i1] + ... + vK[iK].
inline DenseTensor tensor_sum(const std::vector<std::vector<double>>& operands) {
  if (operands.empty()) throw std::invalid_argument("tensor_sum: no operands");
  std::vector<int> shape;
  shape.reserve(operands.size());
  for (const auto& v : operands) {
    if (v.empty()) throw std::invalid_argument("tensor_sum: empty operand");
    shape.push_back(int(v.size()));
  }
  DenseTensor out = DenseTensor::zeros(shape);
  const auto strides = out.strides();
  const std::int64_t n = out.size();
  for (std::int64_t f = 0; f < n; ++f) {
    double s = 0.0;
    for (std::size_t k = 0; k < operands.size(); ++k)
      s += operands[k][std::size_t((f / strides[k]) % shape[k])];
    out.data[std::size_t(f)] = s;
  }
  return out;
}

/// Marginalize all axes of t except keep_axis. Entry l of the result reduces
/// every tensor entry whose keep_axis index equals l. logsumexp mode uses the
/// max-subtract form; on a rank-1 tensor the reduction is the identity.
inline std::vector<double> reduce_except(const DenseTensor& t, int keep_axis, Reduce mode) {
  if (keep_axis < 0 || keep_axis >= t.rank())
    throw std::out_of_range("reduce_except: axis out of range");
  const int card = t.shape[std::size_t(keep_axis)];
  const std::int64_t stride = t.strides()[std::size_t(keep_axis)];
  const std::int64_t n = t.size();
  std::vector<double> mx(std::size_t(card), -std::numeric_limits<double>::infinity());
  for (std::int64_t f = 0; f < n; ++f) {
    std::size_t l = std::size_t((f / stride) % card);
    mx[l] = std::max(mx[l], t.data[std::size_t(f)]);
  }
  if (mode == Reduce::max) return mx;
  std::vector<double> acc(std::size_t(card), 0.0);
  for (std::int64_t f = 0; f < n; ++f) {
    std::size_t l = std::size_t((f / stride) % card);
    if (std::isfinite(mx[l])) acc[l] += std::exp(t.data[std::size_t(f)] - mx[l]);
  }
  std::vector<double> out(static_cast<std::size_t>(card));
  for (std::size_t l = 0; l < out.size(); ++l)
    out[l] = std::isfinite(mx[l]) ? mx[l] + std::log(acc[l]) : mx[l];
  return out;
}

/// In-place x -= logsumexp(x); afterwards logsumexp(x) == 0 up to rounding.
inline void normalize_lse(std::vector<double>& v) {
  double z = logsumexp(v);
  for (double& x : v) x -= z;
}

/// Mixed-radix counter over `radices`, last position fastest (row-major
/// order, i.e. lexicographically ascending tuples). Returns false when the
/// counter wraps back to all zeros.
inline bool next_assignment(std::vector<int>& idx, std::span<const int> radices) {
  for (int k = int(idx.size()) - 1; k >= 0; --k) {
    if (++idx[std::size_t(k)] < radices[std::size_t(k)]) return true;
    idx[std::size_t(k)] = 0;
  }
  return false;
}

}  // namespace fg
