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

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fg/factor_graph.hpp"
#include "fg/tensor.hpp"

namespace fg {

/// Ground truth from exhaustive enumeration.
struct ExactResult {
  double log_Z = 0.0;
  std::vector<std::vector<double>> marginals;  // per variable, sums to 1
  std::vector<int> map_assignment;             // lexicographically smallest argmax
  double map_log_score = 0.0;
};

struct StateSpaceCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
/// Streaming log-sum-exp accumulator with on-the-fly rescaling.
struct OnlineLse {
  double mx = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  void add(double x) {
    if (x == -std::numeric_limits<double>::infinity()) return;
    if (x <= mx) {
      sum += std::exp(x - mx);
    } else {
      sum = std::isfinite(mx) ? sum * std::exp(mx - x) + 1.0 : 1.0;
      mx = x;
    }
  }
  double value() const {
    return std::isfinite(mx) ? mx + std::log(sum) : mx;
  }
};
}  // namespace detail

/// Enumerate every joint assignment (mixed-radix counting, last variable
/// fastest, i.e. lexicographic order) and accumulate the partition function,
/// all single-variable marginals and the MAP assignment in log space. The
/// first assignment attaining the maximum score wins ties, which is the
/// lexicographically smallest one.
inline ExactResult enumerate(const FactorGraph& g,
                             std::int64_t state_cap = std::int64_t(1) << 24) {
  const std::int64_t total = g.joint_state_count(state_cap);
  if (total > state_cap)
    throw StateSpaceCapExceeded("enumerate: joint state space exceeds cap");

  const int n = g.num_vars();
  detail::OnlineLse z;
  std::vector<std::vector<detail::OnlineLse>> marg(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    marg[std::size_t(i)].resize(std::size_t(g.cardinalities[std::size_t(i)]));

  // Per-factor flat offsets are updated incrementally as the counter steps.
  const int m = g.num_factors();
  std::vector<std::vector<std::int64_t>> axis_stride(static_cast<std::size_t>(n));
  for (int a = 0; a < m; ++a) {
    const auto strides = g.log_potentials[std::size_t(a)].strides();
    const auto& scope = g.scopes[std::size_t(a)];
    for (std::size_t k = 0; k < scope.size(); ++k) {
      auto& lst = axis_stride[std::size_t(scope[k])];
      if (lst.empty()) lst.resize(std::size_t(m), 0);
      lst[std::size_t(a)] = strides[k];
    }
  }
  std::vector<std::int64_t> offset(std::size_t(m), 0);

  std::vector<int> idx(std::size_t(n), 0);
  std::vector<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  if (n == 0) {
    // Degenerate but well-defined: empty product, single empty assignment.
    ExactResult r;
    r.log_Z = 0.0;
    r.map_log_score = 0.0;
    return r;
  }
  while (true) {
    double s = 0.0;
    for (int a = 0; a < m; ++a)
      s += g.log_potentials[std::size_t(a)].data[std::size_t(offset[std::size_t(a)])];
    z.add(s);
    for (int i = 0; i < n; ++i)
      marg[std::size_t(i)][std::size_t(idx[std::size_t(i)])].add(s);
    if (s > best_score) {
      best_score = s;
      best = idx;
    }
    // Step the counter and patch factor offsets for the changed digits.
    int k = n - 1;
    for (; k >= 0; --k) {
      auto& strides = axis_stride[std::size_t(k)];
      if (idx[std::size_t(k)] + 1 < g.cardinalities[std::size_t(k)]) {
        ++idx[std::size_t(k)];
        if (!strides.empty())
          for (int a = 0; a < m; ++a) offset[std::size_t(a)] += strides[std::size_t(a)];
        break;
      }
      if (!strides.empty())
        for (int a = 0; a < m; ++a)
          offset[std::size_t(a)] -= strides[std::size_t(a)] * idx[std::size_t(k)];
      idx[std::size_t(k)] = 0;
    }
    if (k < 0) break;
  }

  ExactResult r;
  r.log_Z = z.value();
  r.marginals.resize(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    auto& mi = r.marginals[std::size_t(i)];
    mi.resize(marg[std::size_t(i)].size());
    for (std::size_t l = 0; l < mi.size(); ++l)
      mi[l] = std::exp(marg[std::size_t(i)][l].value() - r.log_Z);
  }
  r.map_assignment = std::move(best);
  r.map_log_score = best_score;
  return r;
}

}  // namespace fg
