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
#include <stdexcept>
#include <vector>

#include "fg/autodiff.hpp"
#include "fg/bp.hpp"
#include "fg/factor_graph.hpp"
#include "fg/nn.hpp"
#include "fg/rng.hpp"
#include "fg/tensor.hpp"

namespace fg {

/// BP with a learned per-entry damping ratio on the factor-to-variable
/// updates. Variable-to-factor messages stay exactly the BP update; each
/// fac-to-var entry is damped by alpha = sigmoid(phi(five scalar features)),
/// where phi is a shared 3-layer MLP. Because phi acts on scalars attached
/// to one (edge, assignment) slot, the model inherits every isomorphism
/// symmetry of BP regardless of its parameters.
struct FeNbpConfig {
  int iterations = 10;
  BpMode mode = BpMode::sum;
  bool graph_norm = false;  // graph-wise normalization inside phi
};

struct FeNbpModel {
  FeNbpConfig config;
  ParamStore params;

  static constexpr int feature_dim = 5;
  static constexpr int hidden_dim = 64;

  Mlp phi() const {
    return Mlp{"fenbp/phi", {feature_dim, hidden_dim, hidden_dim, 1},
               Activation::leaky_relu, config.graph_norm};
  }

  /// All-zero parameters: every damping ratio is sigmoid(0) = 0.5, so the
  /// untrained model reproduces fac-to-var-damped BP. A different initial
  /// damping ratio (a tunable of the MAP experiments) is realized by the
  /// output bias alone, keeping alpha constant until training moves it.
  static FeNbpModel zero_init(FeNbpConfig cfg = {}, double initial_damping = 0.5) {
    FeNbpModel m;
    m.config = cfg;
    m.phi().ensure_params(m.params);
    if (initial_damping != 0.5) {
      if (initial_damping <= 0.0 || initial_damping >= 1.0)
        throw std::invalid_argument("initial damping must be inside (0,1)");
      m.params.at("fenbp/phi/b2").values[0] =
          std::log(initial_damping / (1.0 - initial_damping));
    }
    return m;
  }

  static FeNbpModel random_init(FeNbpConfig cfg, std::uint64_t seed) {
    FeNbpModel m = zero_init(cfg);
    Rng rng(seed);
    xavier_init(m.params, rng);
    return m;
  }
};

/// Tape handles produced by one unrolled run.
struct FeNbpTapeRun {
  std::vector<Value> var_to_fac;        // final messages, per edge
  std::vector<Value> fac_to_var;        // final messages, per edge
  std::vector<Value> log_var_beliefs;   // per variable, LSE-normalized
  std::vector<Value> log_factor_beliefs;  // per factor, LSE-normalized tensors
  std::vector<Value> last_alphas;       // per edge, the final damping ratios
  double last_delta = 0.0;              // L-inf message change of iteration T
};

namespace detail {
inline Value lse_normalize(Tape& t, Value v) {
  return t.badd_scalar(v, t.lse_all(v), -1.0);
}
}  // namespace detail

/// Unroll `cfg.iterations` synchronous rounds on the tape. Gradients flow
/// through every iteration, including the belief features feeding alpha.
inline FeNbpTapeRun fenbp_run(Tape& t, const FactorGraph& g, ParamStore& params,
                              const FeNbpConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("fenbp_run: iterations < 1");
  const EdgeIndex edges(g);
  const int ne = edges.num_edges();
  const Mlp phi{"fenbp/phi",
                {FeNbpModel::feature_dim, FeNbpModel::hidden_dim, FeNbpModel::hidden_dim, 1},
                Activation::leaky_relu, cfg.graph_norm};

  std::vector<Value> f2v(static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e)
    f2v[std::size_t(e)] = t.constant(DenseTensor::zeros(
        {g.cardinalities[std::size_t(edges.var[std::size_t(e)])]}));

  std::vector<int> offsets(static_cast<std::size_t>(ne));
  int total_entries = 0;
  for (int e = 0; e < ne; ++e) {
    offsets[std::size_t(e)] = total_entries;
    total_entries += g.cardinalities[std::size_t(edges.var[std::size_t(e)])];
  }

  std::vector<Value> v2f(static_cast<std::size_t>(ne));
  std::vector<Value> log_vb(static_cast<std::size_t>(g.num_vars()));
  std::vector<Value> log_fb(static_cast<std::size_t>(g.num_factors()));
  std::vector<Value> alphas(static_cast<std::size_t>(ne));
  std::vector<Value> prev_f2v_snapshot;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    prev_f2v_snapshot = f2v;

    // Variable round: messages and (previous-message) variable beliefs.
    std::vector<Value> var_sum(static_cast<std::size_t>(g.num_vars()));
    for (int i = 0; i < g.num_vars(); ++i) {
      std::vector<Value> incoming;
      for (int e : edges.var_edges[std::size_t(i)]) incoming.push_back(f2v[std::size_t(e)]);
      var_sum[std::size_t(i)] =
          incoming.empty()
              ? t.constant(DenseTensor::zeros({g.cardinalities[std::size_t(i)]}))
              : t.add_n(incoming);
      log_vb[std::size_t(i)] = detail::lse_normalize(t, var_sum[std::size_t(i)]);
    }
    for (int e = 0; e < ne; ++e) {
      Value raw = t.sub(var_sum[std::size_t(edges.var[std::size_t(e)])], f2v[std::size_t(e)]);
      v2f[std::size_t(e)] = detail::lse_normalize(t, raw);
    }

    // Factor round: accumulate psi + all incoming messages once per factor.
    std::vector<Value> fac_acc(static_cast<std::size_t>(g.num_factors()));
    for (int a = 0; a < g.num_factors(); ++a) {
      Value acc = t.constant(g.log_potentials[std::size_t(a)]);
      const auto& fe = edges.factor_edges[std::size_t(a)];
      for (int k = 0; k < int(fe.size()); ++k)
        acc = t.axis_add(acc, v2f[std::size_t(fe[std::size_t(k)])], k, 1.0);
      fac_acc[std::size_t(a)] = acc;
      log_fb[std::size_t(a)] = detail::lse_normalize(t, acc);
    }

    // Undamped messages and the five per-entry features of each edge.
    std::vector<Value> m_tilde(static_cast<std::size_t>(ne));
    std::vector<Value> cols(5);
    std::vector<Value> f1, f2, f3, f4, f5;
    for (int e = 0; e < ne; ++e) {
      const int a = edges.factor[std::size_t(e)];
      const int i = edges.var[std::size_t(e)];
      const int p = edges.pos[std::size_t(e)];
      Value pre = t.axis_add(fac_acc[std::size_t(a)], v2f[std::size_t(e)], p, -1.0);
      Value red = cfg.mode == BpMode::sum ? t.logsumexp_except(pre, p) : t.max_except(pre, p);
      m_tilde[std::size_t(e)] = detail::lse_normalize(t, red);

      f1.push_back(f2v[std::size_t(e)]);
      f2.push_back(m_tilde[std::size_t(e)]);
      f3.push_back(log_vb[std::size_t(i)]);
      f4.push_back(t.logsumexp_except(log_fb[std::size_t(a)], p));
      f5.push_back(t.max_except(log_fb[std::size_t(a)], p));
    }
    cols[0] = t.concat(f1);
    cols[1] = t.concat(f2);
    cols[2] = t.concat(f3);
    cols[3] = t.concat(f4);
    cols[4] = t.concat(f5);
    Value features = t.stack_cols(cols);                    // [entries x 5]
    Value logits = phi.apply_rows(t, params, features);     // [entries x 1]
    Value alpha_all = t.sigmoid(t.reshape(logits, {total_entries}));

    for (int e = 0; e < ne; ++e) {
      const int card = g.cardinalities[std::size_t(edges.var[std::size_t(e)])];
      Value alpha = t.slice(alpha_all, offsets[std::size_t(e)], card);
      alphas[std::size_t(e)] = alpha;
      Value diff = t.sub(f2v[std::size_t(e)], m_tilde[std::size_t(e)]);
      Value damped = t.add(m_tilde[std::size_t(e)], t.mul(alpha, diff));
      f2v[std::size_t(e)] = detail::lse_normalize(t, damped);
    }
  }

  FeNbpTapeRun run;
  run.var_to_fac = v2f;
  run.fac_to_var = f2v;
  run.last_alphas = alphas;
  for (int e = 0; e < ne; ++e) {
    const auto& now = t.value(f2v[std::size_t(e)]).data;
    const auto& before = t.value(prev_f2v_snapshot[std::size_t(e)]).data;
    for (std::size_t l = 0; l < now.size(); ++l)
      run.last_delta = std::max(run.last_delta, std::abs(now[l] - before[l]));
  }

  // Final beliefs from the final messages of both directions.
  run.log_var_beliefs.resize(std::size_t(g.num_vars()));
  for (int i = 0; i < g.num_vars(); ++i) {
    std::vector<Value> incoming;
    for (int e : edges.var_edges[std::size_t(i)]) incoming.push_back(f2v[std::size_t(e)]);
    Value s = incoming.empty()
                  ? t.constant(DenseTensor::zeros({g.cardinalities[std::size_t(i)]}))
                  : t.add_n(incoming);
    run.log_var_beliefs[std::size_t(i)] = detail::lse_normalize(t, s);
  }
  run.log_factor_beliefs.resize(std::size_t(g.num_factors()));
  for (int a = 0; a < g.num_factors(); ++a) {
    Value acc = t.constant(g.log_potentials[std::size_t(a)]);
    const auto& fe = edges.factor_edges[std::size_t(a)];
    for (int k = 0; k < int(fe.size()); ++k)
      acc = t.axis_add(acc, v2f[std::size_t(fe[std::size_t(k)])], k, 1.0);
    run.log_factor_beliefs[std::size_t(a)] = detail::lse_normalize(t, acc);
  }
  return run;
}

/// Plain-data forward pass: messages, beliefs (linear space) and a
/// convergence verdict after exactly cfg.iterations rounds.
inline BpResult fenbp_forward(const FactorGraph& g, FeNbpModel& model,
                              double convergence_tol = 1e-8) {
  Tape t;
  FeNbpTapeRun run = fenbp_run(t, g, model.params, model.config);
  BpResult r;
  const int ne = int(run.var_to_fac.size());
  r.messages.var_to_fac.resize(std::size_t(ne));
  r.messages.fac_to_var.resize(std::size_t(ne));
  for (int e = 0; e < ne; ++e) {
    r.messages.var_to_fac[std::size_t(e)] = t.value(run.var_to_fac[std::size_t(e)]).data;
    r.messages.fac_to_var[std::size_t(e)] = t.value(run.fac_to_var[std::size_t(e)]).data;
  }
  r.beliefs.variable_beliefs.resize(run.log_var_beliefs.size());
  for (std::size_t i = 0; i < run.log_var_beliefs.size(); ++i) {
    auto b = t.value(run.log_var_beliefs[i]).data;
    for (double& x : b) x = std::exp(x);
    r.beliefs.variable_beliefs[i] = std::move(b);
  }
  r.beliefs.factor_beliefs.resize(run.log_factor_beliefs.size());
  for (std::size_t a = 0; a < run.log_factor_beliefs.size(); ++a) {
    DenseTensor b = t.value(run.log_factor_beliefs[a]);
    for (double& x : b.data) x = std::exp(x);
    r.beliefs.factor_beliefs[a] = std::move(b);
  }
  r.iterations = model.config.iterations;
  r.converged = run.last_delta < convergence_tol;
  return r;
}

/// Marginal estimates only.
inline std::vector<std::vector<double>> fenbp_marginals(const FactorGraph& g,
                                                        FeNbpModel& model) {
  return fenbp_forward(g, model).beliefs.variable_beliefs;
}

/// Mean over variables of the cross-entropy between target marginals and the
/// model's (log-space) beliefs.
inline Value fenbp_marginal_loss(Tape& t, const FactorGraph& g, ParamStore& params,
                                 const FeNbpConfig& cfg,
                                 const std::vector<std::vector<double>>& target_marginals) {
  FeNbpTapeRun run = fenbp_run(t, g, params, cfg);
  std::vector<Value> terms;
  for (int i = 0; i < g.num_vars(); ++i) {
    Value dot = t.sum_reduce(t.mul(run.log_var_beliefs[std::size_t(i)],
                                   t.constant_vector(target_marginals[std::size_t(i)])));
    terms.push_back(t.neg(dot));
  }
  return t.scale(t.add_n(terms), 1.0 / double(g.num_vars()));
}

/// Expected log-score of an assignment sampled from the factored belief
/// distribution: sum_a sum_{x_a} prod_j b_j(x_j) * psi_a(x_a).
inline Value fenbp_expected_score(Tape& t, const FactorGraph& g,
                                  const std::vector<Value>& log_var_beliefs) {
  std::vector<Value> per_factor;
  for (int a = 0; a < g.num_factors(); ++a) {
    const auto& scope = g.scopes[std::size_t(a)];
    std::vector<Value> logs;
    for (int v : scope) logs.push_back(log_var_beliefs[std::size_t(v)]);
    Value joint = scope.size() == 1 ? logs[0] : t.tensor_sum(logs);
    Value prob = t.exp_(joint);
    per_factor.push_back(t.sum_reduce(t.mul(prob, t.constant(g.log_potentials[std::size_t(a)]))));
  }
  return t.add_n(per_factor);
}

/// Relative expected-score gap |(s* - E[score]) / s*| for one graph; the
/// MAP-inference training loss (averaged over a dataset by the caller).
inline Value fenbp_uai_loss(Tape& t, const FactorGraph& g, ParamStore& params,
                            const FeNbpConfig& cfg, double oracle_log_score) {
  FeNbpTapeRun run = fenbp_run(t, g, params, cfg);
  Value expected = fenbp_expected_score(t, g, run.log_var_beliefs);
  return t.abs_(t.affine(t.scale(expected, 1.0 / oracle_log_score), -1.0, 1.0));
}

}  // namespace fg
