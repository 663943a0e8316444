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
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fg/autodiff.hpp"
#include "fg/rng.hpp"
#include "fg/tensor.hpp"

namespace fg {

enum class Activation { relu, leaky_relu, tanh };

inline Value apply_activation(Tape& t, Value x, Activation act) {
  switch (act) {
    case Activation::relu: return t.relu(x);
    case Activation::leaky_relu: return t.leaky_relu(x, 0.01);
    case Activation::tanh: return t.tanh_(x);
  }
  throw std::logic_error("apply_activation: bad enum");
}

/// Multi-layer perceptron over a ParamStore. Weights are [in x out] so a row
/// batch X [r x in] maps by X*W + b. Hidden layers apply the activation,
/// optionally preceded by graph-wise normalization; the output layer is
/// linear.
struct Mlp {
  std::string prefix;
  std::vector<int> sizes;  // in, hidden..., out
  Activation activation = Activation::relu;
  bool graph_norm = false;

  static std::string wname(const std::string& prefix, int layer) {
    return prefix + "/w" + std::to_string(layer);
  }
  static std::string bname(const std::string& prefix, int layer) {
    return prefix + "/b" + std::to_string(layer);
  }

  /// Create zero-valued parameter entries for this layer spec.
  void ensure_params(ParamStore& store) const {
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      if (!store.has(wname(prefix, int(l))))
        store.add(wname(prefix, int(l)), {sizes[l], sizes[l + 1]});
      if (!store.has(bname(prefix, int(l))))
        store.add(bname(prefix, int(l)), {sizes[l + 1]});
    }
  }

  /// rows: [r x sizes.front()] -> [r x sizes.back()].
  Value apply_rows(Tape& t, ParamStore& store, Value rows) const {
    Value x = rows;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      Value w = t.param(store, wname(prefix, int(l)));
      Value b = t.param(store, bname(prefix, int(l)));
      x = t.add_row_vec(t.matmul(x, w), b);
      if (l + 2 < sizes.size()) {
        if (graph_norm) x = t.graph_norm_rows(x);
        x = apply_activation(t, x, activation);
      }
    }
    return x;
  }

  /// vec: [sizes.front()] -> [sizes.back()].
  Value apply_vec(Tape& t, ParamStore& store, Value vec) const {
    Value rows = t.reshape(vec, {1, sizes.front()});
    Value out = apply_rows(t, store, rows);
    return t.reshape(out, {sizes.back()});
  }
};

/// mlp_forward on plain data: builds a throwaway tape. The layer spec lists
/// every layer width including input and output.
inline std::vector<double> mlp_forward(ParamStore& store, const std::string& prefix,
                                       const std::vector<double>& input,
                                       const std::vector<int>& sizes, Activation act,
                                       bool graph_norm = false) {
  Mlp mlp{prefix, sizes, act, graph_norm};
  Tape t;
  Value out = mlp.apply_vec(t, store, t.constant_vector(input));
  return t.value(out).data;
}

/// GRU parameters: per gate an input matrix [in x hidden], a recurrent
/// matrix [hidden x hidden] and a bias [hidden].
struct GruCell {
  std::string prefix;
  int input_dim = 0;
  int hidden_dim = 0;

  void ensure_params(ParamStore& store) const {
    for (const char* gate : {"z", "r", "n"}) {
      std::string s(gate);
      if (!store.has(prefix + "/w" + s)) store.add(prefix + "/w" + s, {input_dim, hidden_dim});
      if (!store.has(prefix + "/u" + s)) store.add(prefix + "/u" + s, {hidden_dim, hidden_dim});
      if (!store.has(prefix + "/b" + s)) store.add(prefix + "/b" + s, {hidden_dim});
    }
  }

  /// Batched step: hidden [r x H], input [r x I] -> [r x H].
  /// z = sig(xWz + hUz + bz), r = sig(xWr + hUr + br),
  /// n = tanh(xWn + r .* (hUn) + bn), h' = z .* h + (1-z) .* n.
  /// The update gate z multiplies the old state, so z -> 1 freezes it.
  Value step_rows(Tape& t, ParamStore& store, Value hidden, Value input) const {
    auto gate = [&](const char* g) {
      Value w = t.param(store, prefix + "/w" + g);
      Value u = t.param(store, prefix + "/u" + g);
      Value b = t.param(store, prefix + "/b" + g);
      return t.add_row_vec(t.add(t.matmul(input, w), t.matmul(hidden, u)), b);
    };
    Value z = t.sigmoid(gate("z"));
    Value r = t.sigmoid(gate("r"));
    Value wn = t.param(store, prefix + "/wn");
    Value un = t.param(store, prefix + "/un");
    Value bn = t.param(store, prefix + "/bn");
    Value cand = t.tanh_(t.add_row_vec(
        t.add(t.matmul(input, wn), t.mul(r, t.matmul(hidden, un))), bn));
    Value keep = t.mul(z, hidden);
    Value blend = t.mul(t.affine(z, -1.0, 1.0), cand);
    return t.add(keep, blend);
  }

  Value step_vec(Tape& t, ParamStore& store, Value hidden, Value input) const {
    Value h = t.reshape(hidden, {1, hidden_dim});
    Value x = t.reshape(input, {1, input_dim});
    return t.reshape(step_rows(t, store, h, x), {hidden_dim});
  }
};

/// gru_cell on plain data; parameters must already exist under prefix.
inline std::vector<double> gru_cell(ParamStore& store, const std::string& prefix,
                                    const std::vector<double>& hidden,
                                    const std::vector<double>& input) {
  GruCell cell{prefix, int(input.size()), int(hidden.size())};
  Tape t;
  Value out = cell.step_vec(t, store, t.constant_vector(hidden), t.constant_vector(input));
  return t.value(out).data;
}

/// Graph-wise normalization on plain feature vectors: per channel, subtract
/// the mean and divide by sqrt(variance + eps), statistics over every
/// feature vector of the set (one factor graph's features, never a batch).
inline std::vector<std::vector<double>> graph_norm(
    const std::vector<std::vector<double>>& features, double eps = 1e-5) {
  if (features.empty()) throw std::invalid_argument("graph_norm: empty feature set");
  const std::size_t dim = features[0].size();
  std::vector<std::vector<double>> out(features.size(), std::vector<double>(dim));
  for (std::size_t j = 0; j < dim; ++j) {
    double mean = 0.0;
    for (const auto& f : features) mean += f[j];
    mean /= double(features.size());
    double var = 0.0;
    for (const auto& f : features) var += (f[j] - mean) * (f[j] - mean);
    var /= double(features.size());
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < features.size(); ++i) out[i][j] = (features[i][j] - mean) * inv;
  }
  return out;
}

/// Adam with bias correction; one slot pair per ParamStore entry.
struct AdamState {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> slots;
  std::int64_t step = 0;
};

inline void adam_step(ParamStore& store, AdamState& state, double lr, double beta1 = 0.9,
                      double beta2 = 0.999, double eps = 1e-8) {
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, double(state.step));
  const double c2 = 1.0 - std::pow(beta2, double(state.step));
  for (auto& [name, e] : store.entries) {
    auto& [m, v] = state.slots[name];
    if (m.empty()) {
      m.assign(e.values.size(), 0.0);
      v.assign(e.values.size(), 0.0);
    }
    for (std::size_t k = 0; k < e.values.size(); ++k) {
      const double gk = e.grads[k];
      m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
      v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
      e.values[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
    }
  }
}

/// Fan-balanced uniform init U(+-sqrt(6/(fan_in+fan_out))) for 2-d entries,
/// zeros for biases. Draw order is the store's (sorted) entry order.
inline void xavier_init(ParamStore& store, Rng& rng) {
  for (auto& [name, e] : store.entries) {
    if (e.shape.size() == 2) {
      double bound = std::sqrt(6.0 / (e.shape[0] + e.shape[1]));
      for (double& x : e.values) x = (2.0 * rng.next_double() - 1.0) * bound;
    } else {
      std::fill(e.values.begin(), e.values.end(), 0.0);
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoints: one JSON document {name: {shape: [...], values: [...]}}.

inline nlohmann::json params_to_json(const ParamStore& store) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, e] : store.entries)
    j[name] = {{"shape", e.shape}, {"values", e.values}};
  return j;
}

inline void params_from_json(ParamStore& store, const nlohmann::json& j,
                             bool require_exact = true) {
  std::size_t seen = 0;
  for (auto& [name, e] : store.entries) {
    if (!j.contains(name)) {
      if (require_exact) throw std::runtime_error("checkpoint: missing entry " + name);
      continue;
    }
    const auto& je = j.at(name);
    std::vector<int> shape = je.at("shape").get<std::vector<int>>();
    if (shape != e.shape) throw std::runtime_error("checkpoint: shape mismatch for " + name);
    std::vector<double> vals = je.at("values").get<std::vector<double>>();
    if (vals.size() != e.values.size())
      throw std::runtime_error("checkpoint: value count mismatch for " + name);
    e.values = std::move(vals);
    ++seen;
  }
  if (require_exact && seen != j.size())
    throw std::runtime_error("checkpoint: document has entries unknown to the model");
}

inline void save_params(const ParamStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << params_to_json(store).dump(1) << "\n";
}

inline void load_params(ParamStore& store, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  in >> j;
  params_from_json(store, j);
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.

struct GradCheckOptions {
  int max_coords = 50;     // coordinates sampled (all of them if fewer exist)
  double step = 1e-5;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  int checked = 0;
  int skipped = 0;  // coordinates whose perturbations crossed a kink
};

/// Central differences against the tape gradient of a scalar program.
/// `build` must be a pure function of the store's current values. A
/// coordinate is skipped when the two perturbed forward passes disagree on
/// any relu/abs sign or argmax pick (the program is not differentiable
/// there). Relative error is |ad - fd| / max(|ad|, |fd|, 1).
inline GradCheckResult gradcheck(const std::function<Value(Tape&)>& build, ParamStore& store,
                                 const GradCheckOptions& opt = {}) {
  store.zero_grads();
  Tape base;
  Value root = build(base);
  base.backward(root);

  std::vector<std::pair<std::string, std::size_t>> coords;
  for (const auto& [name, e] : store.entries)
    for (std::size_t k = 0; k < e.values.size(); ++k) coords.emplace_back(name, k);

  Rng rng(opt.seed ^ 0x5851F42D4C957F2DULL);
  rng.shuffle(coords);
  if (int(coords.size()) > opt.max_coords) coords.resize(std::size_t(opt.max_coords));

  GradCheckResult result;
  for (const auto& [name, k] : coords) {
    auto& e = store.at(name);
    const double saved = e.values[k];
    const double analytic = e.grads[k];

    e.values[k] = saved + opt.step;
    Tape plus;
    double f_plus = plus.scalar(build(plus));
    e.values[k] = saved - opt.step;
    Tape minus;
    double f_minus = minus.scalar(build(minus));
    e.values[k] = saved;

    if (plus.kink_signature() != minus.kink_signature()) {
      ++result.skipped;
      continue;
    }
    const double fd = (f_plus - f_minus) / (2.0 * opt.step);
    const double denom = std::max({std::abs(analytic), std::abs(fd), 1.0});
    result.max_rel_err = std::max(result.max_rel_err, std::abs(analytic - fd) / denom);
    ++result.checked;
  }
  return result;
}

}  // namespace fg
