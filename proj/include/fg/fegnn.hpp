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

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fg/autodiff.hpp"
#include "fg/bp.hpp"
#include "fg/factor_graph.hpp"
#include "fg/nn.hpp"
#include "fg/rng.hpp"

namespace fg {

/// Learned message passing over per-directed-edge hidden states. The
/// variable-side update aggregates transformed fac-to-var states through a
/// GRU; the factor side projects the hidden states to one C-vector per
/// var-to-fac edge, combines them with the factor potential through tensor
/// sum + log-sum-exp exactly like BP, and feeds the reduced C-vector
/// (projected back to H) through a second GRU. Because the potential only
/// ever enters through the axis-aligned tensor sum, relabeling a factor's
/// axes cannot change any output.
struct FeGnnConfig {
  int hidden_dim = 5;   // H
  int cardinality = 2;  // C, uniform over all variables
  int layers = 10;      // T
  bool extra_bp_features = false;  // concatenate plain BP messages as inputs
};

struct FeGnnModel {
  FeGnnConfig config;
  ParamStore params;

  int mlp_in() const { return config.hidden_dim + (config.extra_bp_features ? config.cardinality : 0); }
  Mlp mlp1() const { return Mlp{"fegnn/mlp1", {mlp_in(), 64, 64, config.hidden_dim}, Activation::relu}; }
  Mlp mlp2() const { return Mlp{"fegnn/mlp2", {mlp_in(), 64, 64, config.cardinality}, Activation::relu}; }
  Mlp mlp3() const { return Mlp{"fegnn/mlp3", {config.hidden_dim, 64, 64, config.cardinality}, Activation::relu}; }
  GruCell gru1() const { return GruCell{"fegnn/gru1", config.hidden_dim, config.hidden_dim}; }
  GruCell gru2() const { return GruCell{"fegnn/gru2", config.hidden_dim, config.hidden_dim}; }

  static FeGnnModel zero_init(FeGnnConfig cfg = {}) {
    FeGnnModel m;
    m.config = cfg;
    m.mlp1().ensure_params(m.params);
    m.mlp2().ensure_params(m.params);
    m.mlp3().ensure_params(m.params);
    m.gru1().ensure_params(m.params);
    m.gru2().ensure_params(m.params);
    m.params.add("fegnn/proj/w", {cfg.cardinality, cfg.hidden_dim});
    m.params.add("fegnn/proj/b", {cfg.hidden_dim});
    return m;
  }

  static FeGnnModel random_init(FeGnnConfig cfg, std::uint64_t seed) {
    FeGnnModel m = zero_init(cfg);
    Rng rng(seed);
    xavier_init(m.params, rng);
    return m;
  }
};

/// The BP-shaped factor aggregation of one layer: LSE over all axes but the
/// target's of (psi_a + outer-sum of the other edges' C-vectors), normalized
/// to LSE zero. Exposed separately so its agreement with the BP update can
/// be checked directly.
inline Value fegnn_factor_aggregate(Tape& t, const FactorGraph& g, const EdgeIndex& edges,
                                    int edge, const std::vector<Value>& edge_c_vectors) {
  const int a = edges.factor[std::size_t(edge)];
  const int p = edges.pos[std::size_t(edge)];
  const auto& fe = edges.factor_edges[std::size_t(a)];
  std::vector<Value> operands;
  for (int q = 0; q < int(fe.size()); ++q) {
    if (q == p)
      operands.push_back(t.constant(DenseTensor::zeros(
          {g.cardinalities[std::size_t(edges.var[std::size_t(edge)])]})));
    else
      operands.push_back(edge_c_vectors[std::size_t(fe[std::size_t(q)])]);
  }
  Value joint = t.add(t.constant(g.log_potentials[std::size_t(a)]), t.tensor_sum(operands));
  Value red = t.logsumexp_except(joint, p);
  return t.badd_scalar(red, t.lse_all(red), -1.0);
}

struct FeGnnTapeRun {
  Value logits;     // [N x C]
  Value marginals;  // [N x C], softmax rows
};

/// Unrolled forward pass; all variables must have cardinality C.
inline FeGnnTapeRun fegnn_run(Tape& t, const FactorGraph& g, ParamStore& params,
                              const FeGnnConfig& cfg) {
  for (int c : g.cardinalities)
    if (c != cfg.cardinality)
      throw std::invalid_argument("fegnn: variable cardinality differs from model C");

  const EdgeIndex edges(g);
  const int ne = edges.num_edges();
  const int h = cfg.hidden_dim;

  const Mlp mlp1 = FeGnnModel{cfg, {}}.mlp1();
  const Mlp mlp2 = FeGnnModel{cfg, {}}.mlp2();
  const Mlp mlp3 = FeGnnModel{cfg, {}}.mlp3();
  const GruCell gru1 = FeGnnModel{cfg, {}}.gru1();
  const GruCell gru2 = FeGnnModel{cfg, {}}.gru2();

  // Per var-to-fac edge e=(a,i): the fac-to-var edges (c,i) with c != a.
  std::vector<int> excl_offsets{0}, excl_indices;
  for (int e = 0; e < ne; ++e) {
    for (int e2 : edges.var_edges[std::size_t(edges.var[std::size_t(e)])])
      if (e2 != e) excl_indices.push_back(e2);
    excl_offsets.push_back(int(excl_indices.size()));
  }
  std::vector<int> var_offsets{0}, var_indices;
  for (int i = 0; i < g.num_vars(); ++i) {
    for (int e : edges.var_edges[std::size_t(i)]) var_indices.push_back(e);
    var_offsets.push_back(int(var_indices.size()));
  }

  // Optional hand-crafted inputs: damped BP's messages, constant on the tape.
  Value bp_fv_rows{}, bp_vf_rows{};
  if (cfg.extra_bp_features) {
    BpConfig bp_cfg;
    bp_cfg.damping = 0.5;
    bp_cfg.max_iters = cfg.layers;
    bp_cfg.convergence_tol = 0.0;
    BpResult bp = run_bp(g, bp_cfg);
    DenseTensor fv = DenseTensor::zeros({ne, cfg.cardinality});
    DenseTensor vf = DenseTensor::zeros({ne, cfg.cardinality});
    for (int e = 0; e < ne; ++e)
      for (int c = 0; c < cfg.cardinality; ++c) {
        fv.data[std::size_t(e * cfg.cardinality + c)] =
            bp.messages.fac_to_var[std::size_t(e)][std::size_t(c)];
        vf.data[std::size_t(e * cfg.cardinality + c)] =
            bp.messages.var_to_fac[std::size_t(e)][std::size_t(c)];
      }
    bp_fv_rows = t.constant(std::move(fv));
    bp_vf_rows = t.constant(std::move(vf));
  }

  auto with_extras = [&](Value rows, Value extras) {
    if (!cfg.extra_bp_features) return rows;
    std::vector<Value> glued;
    for (int e = 0; e < ne; ++e)
      glued.push_back(t.concat({t.row(rows, e), t.row(extras, e)}));
    return t.stack_rows(glued);
  };

  Value h_vf = t.constant(DenseTensor::zeros({ne, h}));
  Value h_fv = t.constant(DenseTensor::zeros({ne, h}));

  for (int layer = 0; layer < cfg.layers; ++layer) {
    Value m1 = mlp1.apply_rows(t, params, with_extras(h_fv, bp_fv_rows));
    Value in1 = t.segment_sum_rows(m1, excl_offsets, excl_indices);
    h_vf = gru1.step_rows(t, params, h_vf, in1);

    Value m2 = mlp2.apply_rows(t, params, with_extras(h_vf, bp_vf_rows));
    std::vector<Value> c_vectors(static_cast<std::size_t>(ne));
    for (int e = 0; e < ne; ++e) c_vectors[std::size_t(e)] = t.row(m2, e);
    std::vector<Value> agg(static_cast<std::size_t>(ne));
    for (int e = 0; e < ne; ++e)
      agg[std::size_t(e)] = fegnn_factor_aggregate(t, g, edges, e, c_vectors);
    Value agg_rows = t.stack_rows(agg);
    Value in2 = t.add_row_vec(t.matmul(agg_rows, t.param(params, "fegnn/proj/w")),
                              t.param(params, "fegnn/proj/b"));
    h_fv = gru2.step_rows(t, params, h_fv, in2);
  }

  Value pooled = t.segment_sum_rows(h_fv, var_offsets, var_indices);  // [N x H]
  FeGnnTapeRun run;
  run.logits = mlp3.apply_rows(t, params, pooled);
  run.marginals = t.softmax_rows(run.logits);
  return run;
}

/// Plain-data marginal estimates.
inline std::vector<std::vector<double>> fegnn_forward(const FactorGraph& g, FeGnnModel& model) {
  Tape t;
  FeGnnTapeRun run = fegnn_run(t, g, model.params, model.config);
  const DenseTensor& m = t.value(run.marginals);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(g.num_vars()));
  for (int i = 0; i < g.num_vars(); ++i) {
    out[std::size_t(i)].resize(std::size_t(model.config.cardinality));
    for (int c = 0; c < model.config.cardinality; ++c)
      out[std::size_t(i)][std::size_t(c)] =
          m.data[std::size_t(i * model.config.cardinality + c)];
  }
  return out;
}

/// Mean cross-entropy between the oracle marginals and the softmax readout.
inline Value fegnn_marginal_loss(Tape& t, const FactorGraph& g, ParamStore& params,
                                 const FeGnnConfig& cfg,
                                 const std::vector<std::vector<double>>& target_marginals) {
  FeGnnTapeRun run = fegnn_run(t, g, params, cfg);
  DenseTensor targets = DenseTensor::zeros({g.num_vars(), cfg.cardinality});
  for (int i = 0; i < g.num_vars(); ++i)
    for (int c = 0; c < cfg.cardinality; ++c)
      targets.data[std::size_t(i * cfg.cardinality + c)] =
          target_marginals[std::size_t(i)][std::size_t(c)];
  return t.ce_logits_rows(run.logits, std::move(targets));
}

}  // namespace fg
