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
#include <stdexcept>
#include <vector>

#include "fg/factor_graph.hpp"
#include "fg/tensor.hpp"

namespace fg {

enum class BpMode { sum, max };

/// Synchronous loopy BP configuration. Damping interpolates each fresh
/// message toward its previous value: m = m~ + alpha (m_prev - m~).
/// damp_var_to_fac=false restricts damping to factor-to-variable messages
/// (the convention the learned-damping model generalizes).
struct BpConfig {
  BpMode mode = BpMode::sum;
  double damping = 0.0;  // alpha in [0, 1]
  int max_iters = 200;
  double convergence_tol = 1e-8;  // L-inf on message change, strict <
  bool damp_var_to_fac = true;

  void validate() const {
    if (damping < 0.0 || damping > 1.0)
      throw std::invalid_argument("BpConfig: damping outside [0,1]");
    if (max_iters < 0) throw std::invalid_argument("BpConfig: negative max_iters");
  }
};

/// Per-directed-edge message vectors, indexed by EdgeIndex edge id. Kept
/// LSE-normalized (logsumexp of every vector is 0) after every update.
struct MessageSet {
  std::vector<std::vector<double>> var_to_fac;
  std::vector<std::vector<double>> fac_to_var;
};

/// Linear-space beliefs: variable beliefs sum to 1, factor belief tensors
/// sum to 1.
struct BeliefSet {
  std::vector<std::vector<double>> variable_beliefs;
  std::vector<DenseTensor> factor_beliefs;
};

struct BpResult {
  MessageSet messages;
  BeliefSet beliefs;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

/// psi + every var-to-fac message of the factor broadcast on its own axis.
inline DenseTensor factor_accumulate(const FactorGraph& g, const EdgeIndex& edges,
                                     const std::vector<std::vector<double>>& var_to_fac,
                                     int a) {
  DenseTensor t = g.log_potentials[std::size_t(a)];
  const auto strides = t.strides();
  for (int k = 0; k < int(g.scopes[std::size_t(a)].size()); ++k) {
    int e = edges.factor_edges[std::size_t(a)][std::size_t(k)];
    const auto& msg = var_to_fac[std::size_t(e)];
    const std::int64_t stride = strides[std::size_t(k)];
    const int card = t.shape[std::size_t(k)];
    for (std::int64_t f = 0; f < t.size(); ++f)
      t.data[std::size_t(f)] += msg[std::size_t((f / stride) % card)];
  }
  return t;
}

/// Reduce (psi + incoming sums - own message) onto the axis at `pos`.
inline std::vector<double> factor_message(const DenseTensor& acc,
                                          const std::vector<double>& own_msg, int pos,
                                          BpMode mode) {
  DenseTensor t = acc;
  const std::int64_t stride = t.strides()[std::size_t(pos)];
  const int card = t.shape[std::size_t(pos)];
  for (std::int64_t f = 0; f < t.size(); ++f)
    t.data[std::size_t(f)] -= own_msg[std::size_t((f / stride) % card)];
  return reduce_except(t, pos, mode == BpMode::sum ? Reduce::logsumexp : Reduce::max);
}

}  // namespace detail

/// Loopy belief propagation, fully synchronous schedule: all var-to-fac
/// updates from the previous iteration's fac-to-var messages, then all
/// fac-to-var updates from the fresh var-to-fac messages. Messages start at
/// constant zero and are renormalized (LSE = 0) after every update,
/// including after damping. Beliefs come from the final iteration.
inline BpResult run_bp(const FactorGraph& g, const BpConfig& cfg) {
  cfg.validate();
  const EdgeIndex edges(g);
  const int ne = edges.num_edges();
  const double alpha = cfg.damping;

  BpResult r;
  auto& v2f = r.messages.var_to_fac;
  auto& f2v = r.messages.fac_to_var;
  v2f.resize(std::size_t(ne));
  f2v.resize(std::size_t(ne));
  for (int e = 0; e < ne; ++e) {
    std::size_t card = std::size_t(g.cardinalities[std::size_t(edges.var[std::size_t(e)])]);
    v2f[std::size_t(e)].assign(card, 0.0);
    f2v[std::size_t(e)].assign(card, 0.0);
  }

  std::vector<std::vector<double>> v2f_new = v2f, f2v_new = f2v;
  std::vector<double> var_sum;

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    double delta = 0.0;

    // Variable to factor round.
    for (int i = 0; i < g.num_vars(); ++i) {
      const auto& incident = edges.var_edges[std::size_t(i)];
      var_sum.assign(std::size_t(g.cardinalities[std::size_t(i)]), 0.0);
      for (int e : incident)
        for (std::size_t l = 0; l < var_sum.size(); ++l)
          var_sum[l] += f2v[std::size_t(e)][l];
      for (int e : incident) {
        auto& msg = v2f_new[std::size_t(e)];
        for (std::size_t l = 0; l < var_sum.size(); ++l)
          msg[l] = var_sum[l] - f2v[std::size_t(e)][l];
        normalize_lse(msg);
        if (cfg.damp_var_to_fac && alpha != 0.0) {
          for (std::size_t l = 0; l < msg.size(); ++l)
            msg[l] += alpha * (v2f[std::size_t(e)][l] - msg[l]);
          normalize_lse(msg);
        }
      }
    }
    for (int e = 0; e < ne; ++e)
      for (std::size_t l = 0; l < v2f_new[std::size_t(e)].size(); ++l)
        delta = std::max(delta, std::abs(v2f_new[std::size_t(e)][l] - v2f[std::size_t(e)][l]));
    std::swap(v2f, v2f_new);

    // Factor to variable round.
    for (int a = 0; a < g.num_factors(); ++a) {
      DenseTensor acc = detail::factor_accumulate(g, edges, v2f, a);
      for (int k = 0; k < int(g.scopes[std::size_t(a)].size()); ++k) {
        int e = edges.factor_edges[std::size_t(a)][std::size_t(k)];
        auto msg = detail::factor_message(acc, v2f[std::size_t(e)], k, cfg.mode);
        normalize_lse(msg);
        for (std::size_t l = 0; l < msg.size(); ++l)
          msg[l] += alpha * (f2v[std::size_t(e)][l] - msg[l]);
        normalize_lse(msg);
        f2v_new[std::size_t(e)] = std::move(msg);
      }
    }
    for (int e = 0; e < ne; ++e)
      for (std::size_t l = 0; l < f2v_new[std::size_t(e)].size(); ++l)
        delta = std::max(delta, std::abs(f2v_new[std::size_t(e)][l] - f2v[std::size_t(e)][l]));
    std::swap(f2v, f2v_new);

    if (delta < cfg.convergence_tol) {
      r.converged = true;
      ++iter;
      break;
    }
  }
  r.iterations = iter;

  // Beliefs from the final messages.
  r.beliefs.variable_beliefs.resize(std::size_t(g.num_vars()));
  for (int i = 0; i < g.num_vars(); ++i) {
    std::vector<double> b(std::size_t(g.cardinalities[std::size_t(i)]), 0.0);
    for (int e : edges.var_edges[std::size_t(i)])
      for (std::size_t l = 0; l < b.size(); ++l) b[l] += f2v[std::size_t(e)][l];
    normalize_lse(b);
    for (double& x : b) x = std::exp(x);
    r.beliefs.variable_beliefs[std::size_t(i)] = std::move(b);
  }
  r.beliefs.factor_beliefs.resize(std::size_t(g.num_factors()));
  for (int a = 0; a < g.num_factors(); ++a) {
    DenseTensor acc = detail::factor_accumulate(g, edges, v2f, a);
    double z = logsumexp(acc.data);
    for (double& x : acc.data) x = std::exp(x - z);
    r.beliefs.factor_beliefs[std::size_t(a)] = std::move(acc);
  }
  return r;
}

/// Per-variable argmax of the variable beliefs; ties go to the lowest state.
inline std::vector<int> decode_map(const BeliefSet& b) {
  std::vector<int> out(b.variable_beliefs.size());
  for (std::size_t i = 0; i < b.variable_beliefs.size(); ++i) {
    const auto& v = b.variable_beliefs[i];
    int arg = 0;
    for (int l = 1; l < int(v.size()); ++l)
      if (v[std::size_t(l)] > v[std::size_t(arg)]) arg = l;
    out[i] = arg;
  }
  return out;
}

/// Sum of log potentials at an assignment.
inline double log_score(const FactorGraph& g, std::span<const int> assignment) {
  return g.log_score(assignment);
}

/// Probability bounds for the MAP assignment derived from any message set:
/// the upper bound moves every message term to its per-factor / per-variable
/// maximum, the lower bound is the probability of the decoded assignment.
/// Valid for arbitrary (not necessarily converged) messages.
inline std::pair<double, double> map_bounds(const FactorGraph& g, const BpResult& r,
                                            double log_Z) {
  const EdgeIndex edges(g);
  double upper_log = -log_Z;
  for (int a = 0; a < g.num_factors(); ++a) {
    DenseTensor t = g.log_potentials[std::size_t(a)];
    const auto strides = t.strides();
    for (int k = 0; k < int(g.scopes[std::size_t(a)].size()); ++k) {
      int e = edges.factor_edges[std::size_t(a)][std::size_t(k)];
      const auto& msg = r.messages.fac_to_var[std::size_t(e)];
      const std::int64_t stride = strides[std::size_t(k)];
      const int card = t.shape[std::size_t(k)];
      for (std::int64_t f = 0; f < t.size(); ++f)
        t.data[std::size_t(f)] -= msg[std::size_t((f / stride) % card)];
    }
    upper_log += *std::max_element(t.data.begin(), t.data.end());
  }
  for (int i = 0; i < g.num_vars(); ++i) {
    std::vector<double> s(std::size_t(g.cardinalities[std::size_t(i)]), 0.0);
    for (int e : edges.var_edges[std::size_t(i)])
      for (std::size_t l = 0; l < s.size(); ++l) s[l] += r.messages.fac_to_var[std::size_t(e)][l];
    upper_log += *std::max_element(s.begin(), s.end());
  }

  std::vector<int> decoded = decode_map(r.beliefs);
  double lower_log = -log_Z + g.log_score(decoded);
  return {std::exp(lower_log), std::exp(upper_log)};
}

}  // namespace fg
