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
#include <functional>
#include <string>
#include <vector>

#include "fg/bp.hpp"
#include "fg/factor_graph.hpp"
#include "fg/fegnn.hpp"
#include "fg/fenbp.hpp"
#include "fg/rng.hpp"
#include "fg/witness.hpp"

namespace fg {

enum class Symmetry { global, local, assignment };

inline const char* symmetry_name(Symmetry s) {
  switch (s) {
    case Symmetry::global: return "global";
    case Symmetry::local: return "local";
    case Symmetry::assignment: return "assignment";
  }
  return "?";
}

/// Random test graph for the audits: mixed (or uniform binary)
/// cardinalities, a chain of pairwise factors covering every variable, a few
/// extra factors of arity 1-3, standard-normal log potentials.
inline FactorGraph random_audit_graph(Rng& rng, int max_vars = 8, int max_card = 4,
                                      bool binary_only = false) {
  int n = 2 + int(rng.next_below(std::uint64_t(max_vars - 1)));
  std::vector<int> cards(static_cast<std::size_t>(n));
  for (auto& c : cards) c = binary_only ? 2 : 2 + int(rng.next_below(std::uint64_t(max_card - 1)));
  std::vector<std::vector<int>> scopes;
  std::vector<DenseTensor> pots;
  auto add_factor = [&](std::vector<int> scope) {
    std::vector<int> shape;
    for (int v : scope) shape.push_back(cards[std::size_t(v)]);
    DenseTensor t = DenseTensor::zeros(shape);
    for (double& x : t.data) x = rng.next_normal();
    scopes.push_back(std::move(scope));
    pots.push_back(std::move(t));
  };
  for (int i = 0; i < n; ++i)
    if (rng.next_double() < 0.5) add_factor({i});
  for (int i = 1; i < n; ++i) add_factor({int(rng.next_below(std::uint64_t(i))), i});
  int extras = int(rng.next_below(3));
  for (int e = 0; e < extras; ++e) {
    int a = int(rng.next_below(std::uint64_t(n)));
    int b = int(rng.next_below(std::uint64_t(n)));
    if (a == b) continue;
    if (n >= 3 && rng.next_double() < 0.3) {
      int c = int(rng.next_below(std::uint64_t(n)));
      if (c != a && c != b) {
        std::vector<int> scope{a, b, c};
        std::sort(scope.begin(), scope.end());
        add_factor(scope);
        continue;
      }
    }
    add_factor({std::min(a, b), std::max(a, b)});
  }
  return FactorGraph(cards, scopes, pots);
}

struct AuditReport {
  struct PerSymmetry {
    Symmetry symmetry;
    bool asserted = true;  // false: deviation logged but not a guarantee
    double max_deviation = 0.0;
    int comparisons = 0;
    bool pass = true;
  };
  std::string model;
  double tolerance = 0.0;
  std::vector<PerSymmetry> results;
  bool pass = true;
};

/// Compare a model's marginal outputs on (graph, witness-permuted graph)
/// pairs: the permuted run, read back through the witness, must reproduce
/// the original marginals. `infer` must be a pure function of the graph.
inline AuditReport audit_equivariance(
    const std::string& model_name,
    const std::function<std::vector<std::vector<double>>(const FactorGraph&)>& infer,
    const std::vector<FactorGraph>& graphs, int witnesses_per_symmetry, double tolerance,
    std::uint64_t seed, const std::vector<Symmetry>& asserted_symmetries = {
                            Symmetry::global, Symmetry::local, Symmetry::assignment}) {
  AuditReport report;
  report.model = model_name;
  report.tolerance = tolerance;
  Rng rng(seed ^ 0xA0D17ULL);

  for (Symmetry sym : {Symmetry::global, Symmetry::local, Symmetry::assignment}) {
    bool asserted = false;
    for (Symmetry s : asserted_symmetries) asserted |= (s == sym);
    AuditReport::PerSymmetry row;
    row.symmetry = sym;
    row.asserted = asserted;
    for (const FactorGraph& g : graphs) {
      auto base = infer(g);
      for (int w_idx = 0; w_idx < witnesses_per_symmetry; ++w_idx) {
        PermutationWitness w = random_witness(g, rng, sym == Symmetry::global,
                                              sym == Symmetry::local, sym == Symmetry::assignment);
        auto permuted = infer(apply_witness(g, w));
        for (int i = 0; i < g.num_vars(); ++i) {
          int j = w.var_perm[std::size_t(i)];
          for (int l = 0; l < g.cardinalities[std::size_t(i)]; ++l) {
            int lp = w.assignment_perms[std::size_t(i)][std::size_t(l)];
            double dev = std::abs(base[std::size_t(i)][std::size_t(l)] -
                                  permuted[std::size_t(j)][std::size_t(lp)]);
            row.max_deviation = std::max(row.max_deviation, dev);
            ++row.comparisons;
          }
        }
      }
    }
    row.pass = !row.asserted || row.max_deviation < tolerance;
    report.pass = report.pass && row.pass;
    report.results.push_back(row);
  }
  return report;
}

}  // namespace fg
