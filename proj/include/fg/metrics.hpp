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
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fg/exact.hpp"

namespace fg {

/// Per-instance inference output to score: marginal estimates and/or a MAP
/// assignment with its log-score under the instance's graph.
struct InstanceEstimate {
  std::optional<std::vector<std::vector<double>>> marginals;
  std::optional<std::vector<int>> map_assignment;
  std::optional<double> map_log_score;
};

/// Dataset-level scores. kl and rmse are NaN when no instance carried
/// marginal estimates; uai_score likewise without MAP estimates. A MAP
/// assignment of true probability zero makes uai_score infinite.
struct Metrics {
  double kl = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double uai_score = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> per_instance_kl;
  std::vector<double> per_instance_uai;
};

/// KL(truth || estimate) summed over one variable's states; 0 ln 0 := 0 and
/// the estimate is clamped at 1e-12.
inline double kl_divergence(const std::vector<double>& truth, const std::vector<double>& est) {
  double kl = 0.0;
  for (std::size_t l = 0; l < truth.size(); ++l) {
    if (truth[l] <= 0.0) continue;
    kl += truth[l] * std::log(truth[l] / std::max(est[l], 1e-12));
  }
  return kl;
}

/// kl: mean over all variables of all instances; rmse: over every
/// (instance, variable, state) entry; uai_score: mean over instances of
/// |(s* - s_hat) / s*|.
inline Metrics compute_metrics(const std::vector<InstanceEstimate>& estimates,
                               const std::vector<ExactResult>& labels) {
  if (estimates.size() != labels.size())
    throw std::invalid_argument("compute_metrics: misaligned instance lists");
  Metrics m;
  double kl_sum = 0.0, sq_sum = 0.0, uai_sum = 0.0;
  std::int64_t n_vars = 0, n_entries = 0, n_map = 0;
  bool any_marginals = false;
  bool uai_inf = false;

  for (std::size_t k = 0; k < estimates.size(); ++k) {
    const auto& est = estimates[k];
    const auto& lab = labels[k];
    if (est.marginals) {
      any_marginals = true;
      double inst_kl = 0.0;
      for (std::size_t i = 0; i < lab.marginals.size(); ++i) {
        inst_kl += kl_divergence(lab.marginals[i], (*est.marginals)[i]);
        ++n_vars;
        for (std::size_t l = 0; l < lab.marginals[i].size(); ++l) {
          double d = lab.marginals[i][l] - (*est.marginals)[i][l];
          sq_sum += d * d;
          ++n_entries;
        }
      }
      kl_sum += inst_kl;
      m.per_instance_kl.push_back(inst_kl / double(lab.marginals.size()));
    }
    if (est.map_log_score) {
      ++n_map;
      double term;
      if (std::isinf(*est.map_log_score)) {
        term = std::numeric_limits<double>::infinity();
        uai_inf = true;
      } else {
        term = std::abs((lab.map_log_score - *est.map_log_score) / lab.map_log_score);
      }
      uai_sum += term;
      m.per_instance_uai.push_back(term);
    }
  }

  if (any_marginals) {
    m.kl = kl_sum / double(n_vars);
    m.rmse = std::sqrt(sq_sum / double(n_entries));
  }
  if (n_map > 0)
    m.uai_score = uai_inf ? std::numeric_limits<double>::infinity() : uai_sum / double(n_map);
  return m;
}

}  // namespace fg
