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
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fg/exact.hpp"
#include "fg/factor_graph.hpp"
#include "fg/fegnn.hpp"
#include "fg/fenbp.hpp"
#include "fg/nn.hpp"
#include "fg/rng.hpp"

namespace fg {

/// One dataset instance: a graph plus its enumeration labels.
struct LabeledGraph {
  FactorGraph graph;
  ExactResult label;
};

struct TrainConfig {
  int epochs = 100;
  double lr = 1e-3;
  int early_stop_window = 5;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double score_eps = 1e-6;  // MAP training rejects |s*| below this
  bool verbose = false;
};

struct TrainHistory {
  std::vector<double> train_loss;  // mean per epoch
  std::vector<double> val_loss;    // mean per epoch
  int best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
};

namespace detail {
inline std::map<std::string, std::vector<double>> snapshot_values(const ParamStore& s) {
  std::map<std::string, std::vector<double>> snap;
  for (const auto& [name, e] : s.entries) snap[name] = e.values;
  return snap;
}
inline void restore_values(ParamStore& s, const std::map<std::string, std::vector<double>>& snap) {
  for (auto& [name, e] : s.entries) e.values = snap.at(name);
}
}  // namespace detail

/// Minibatch Adam with best-validation early stopping. loss_fn builds the
/// per-instance scalar loss on a fresh tape; gradients are accumulated over
/// the batch and averaged before the step. Stops once the validation loss
/// has not improved for `early_stop_window` consecutive epochs and restores
/// the best-validation parameters.
inline TrainHistory train_loop(
    ParamStore& params, std::span<const LabeledGraph> train, std::span<const LabeledGraph> val,
    const TrainConfig& cfg,
    const std::function<Value(Tape&, const LabeledGraph&)>& loss_fn) {
  if (train.empty()) throw std::invalid_argument("train_loop: empty training set");
  if (val.empty()) throw std::invalid_argument("train_loop: empty validation set");

  AdamState adam;
  Rng rng(cfg.seed ^ 0x1F3D5B79A1C2E4F6ULL);
  TrainHistory hist;
  auto best = detail::snapshot_values(params);

  std::vector<std::size_t> order(train.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

  auto mean_val_loss = [&]() {
    double sum = 0.0;
    for (const auto& inst : val) {
      Tape t;
      sum += t.scalar(loss_fn(t, inst));
    }
    return sum / double(val.size());
  };

  // The initial parameters are a candidate too: if no epoch improves the
  // validation loss, training returns them unchanged.
  hist.best_val_loss = mean_val_loss();
  hist.best_epoch = -1;
  if (cfg.verbose) std::cerr << "initial val " << hist.best_val_loss << "\n";

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double train_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
      std::size_t stop = std::min(order.size(), start + std::size_t(cfg.batch_size));
      params.zero_grads();
      for (std::size_t k = start; k < stop; ++k) {
        Tape t;
        Value loss = loss_fn(t, train[order[k]]);
        train_sum += t.scalar(loss);
        t.backward(loss);
      }
      params.scale_grads(1.0 / double(stop - start));
      adam_step(params, adam, cfg.lr);
    }
    hist.train_loss.push_back(train_sum / double(train.size()));
    double vloss = mean_val_loss();
    hist.val_loss.push_back(vloss);
    if (cfg.verbose)
      std::cerr << "epoch " << epoch << " train " << hist.train_loss.back() << " val " << vloss
                << "\n";
    if (vloss < hist.best_val_loss) {
      hist.best_val_loss = vloss;
      hist.best_epoch = epoch;
      best = detail::snapshot_values(params);
    } else if (epoch - hist.best_epoch >= cfg.early_stop_window) {
      break;
    }
  }
  detail::restore_values(params, best);
  return hist;
}

/// Marginal-objective training for the learned-damping model.
inline TrainHistory fenbp_train_marginals(FeNbpModel& model, std::span<const LabeledGraph> train,
                                          std::span<const LabeledGraph> val,
                                          const TrainConfig& cfg = {}) {
  return train_loop(model.params, train, val, cfg, [&model](Tape& t, const LabeledGraph& inst) {
    return fenbp_marginal_loss(t, inst.graph, model.params, model.config, inst.label.marginals);
  });
}

/// MAP-objective training on the relative expected-score gap; instances with
/// |oracle log-score| <= score_eps cannot be normalized and are dropped with
/// a warning.
inline TrainHistory fenbp_train_map(FeNbpModel& model, std::span<const LabeledGraph> train,
                                    std::span<const LabeledGraph> val,
                                    const TrainConfig& cfg = {}) {
  model.config.mode = BpMode::max;
  std::vector<LabeledGraph> usable_train, usable_val;
  auto filter = [&](std::span<const LabeledGraph> in, std::vector<LabeledGraph>& out,
                    const char* which) {
    for (const auto& inst : in) {
      if (std::abs(inst.label.map_log_score) <= cfg.score_eps) {
        std::cerr << "warning: dropping " << which
                  << " instance with |map log-score| <= " << cfg.score_eps << "\n";
        continue;
      }
      out.push_back(inst);
    }
  };
  filter(train, usable_train, "training");
  filter(val, usable_val, "validation");
  if (usable_train.empty()) throw std::invalid_argument("fenbp_train_map: no usable instances");
  if (usable_val.empty()) throw std::invalid_argument("fenbp_train_map: no usable val instances");
  return train_loop(model.params, usable_train, usable_val, cfg,
                    [&model](Tape& t, const LabeledGraph& inst) {
                      return fenbp_uai_loss(t, inst.graph, model.params, model.config,
                                            inst.label.map_log_score);
                    });
}

/// Marginal-objective training for the GNN model.
inline TrainHistory fegnn_train(FeGnnModel& model, std::span<const LabeledGraph> train,
                                std::span<const LabeledGraph> val, const TrainConfig& cfg = {}) {
  return train_loop(model.params, train, val, cfg, [&model](Tape& t, const LabeledGraph& inst) {
    return fegnn_marginal_loss(t, inst.graph, model.params, model.config, inst.label.marginals);
  });
}

}  // namespace fg
