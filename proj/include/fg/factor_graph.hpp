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
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fg/tensor.hpp"

namespace fg {

/// Discrete factor graph. Potentials are stored in log space from the moment
/// of construction; readers and generators convert linear inputs exactly
/// once. Everything is immutable after construction and safe to share.
///
/// scopes[a] is the ordered variable list of factor a; axis k of
/// log_potentials[a] ranges over the states of scopes[a][k]. States are plain
/// indices 0..card-1.
struct FactorGraph {
  std::vector<int> cardinalities;
  std::vector<std::vector<int>> scopes;
  std::vector<DenseTensor> log_potentials;

  FactorGraph() = default;
  FactorGraph(std::vector<int> cards, std::vector<std::vector<int>> scps,
              std::vector<DenseTensor> pots)
      : cardinalities(std::move(cards)),
        scopes(std::move(scps)),
        log_potentials(std::move(pots)) {
    validate();
  }

  int num_vars() const { return int(cardinalities.size()); }
  int num_factors() const { return int(scopes.size()); }

  void validate() const {
    if (scopes.size() != log_potentials.size())
      throw std::invalid_argument("FactorGraph: scopes/potentials size mismatch");
    for (int c : cardinalities)
      if (c <= 0) throw std::invalid_argument("FactorGraph: non-positive cardinality");
    for (std::size_t a = 0; a < scopes.size(); ++a) {
      const auto& scope = scopes[a];
      if (scope.empty()) throw std::invalid_argument("FactorGraph: empty scope");
      std::vector<bool> seen(cardinalities.size(), false);
      for (int i : scope) {
        if (i < 0 || i >= num_vars())
          throw std::invalid_argument("FactorGraph: scope variable out of range");
        if (seen[std::size_t(i)])
          throw std::invalid_argument("FactorGraph: variable repeated in scope");
        seen[std::size_t(i)] = true;
      }
      const auto& pot = log_potentials[a];
      if (pot.rank() != int(scope.size()))
        throw std::invalid_argument("FactorGraph: potential rank != scope size");
      for (std::size_t k = 0; k < scope.size(); ++k)
        if (pot.shape[k] != cardinalities[std::size_t(scope[k])])
          throw std::invalid_argument("FactorGraph: potential axis does not match cardinality");
    }
  }

  /// Sum of log potentials at a full assignment.
  double log_score(std::span<const int> assignment) const {
    if (int(assignment.size()) != num_vars())
      throw std::invalid_argument("log_score: assignment length mismatch");
    for (int i = 0; i < num_vars(); ++i)
      if (assignment[std::size_t(i)] < 0 ||
          assignment[std::size_t(i)] >= cardinalities[std::size_t(i)])
        throw std::out_of_range("log_score: state index out of range");
    double s = 0.0;
    std::vector<int> local;
    for (int a = 0; a < num_factors(); ++a) {
      const auto& scope = scopes[std::size_t(a)];
      local.resize(scope.size());
      for (std::size_t k = 0; k < scope.size(); ++k)
        local[k] = assignment[std::size_t(scope[k])];
      s += log_potentials[std::size_t(a)].at(local);
    }
    return s;
  }

  /// True iff the variable-factor bipartite graph has a single component
  /// (isolated variables count as their own components).
  bool is_connected() const {
    int n = num_vars() + num_factors();
    if (n == 0) return true;
    std::vector<std::vector<int>> var_to_factors(static_cast<std::size_t>(num_vars()));
    for (int a = 0; a < num_factors(); ++a)
      for (int i : scopes[std::size_t(a)]) var_to_factors[std::size_t(i)].push_back(a);
    std::vector<bool> seen(std::size_t(n), false);
    std::vector<int> stack{0};
    seen[0] = true;
    int count = 0;
    while (!stack.empty()) {
      int node = stack.back();
      stack.pop_back();
      ++count;
      if (node < num_vars()) {
        for (int a : var_to_factors[std::size_t(node)])
          if (!seen[std::size_t(num_vars() + a)]) {
            seen[std::size_t(num_vars() + a)] = true;
            stack.push_back(num_vars() + a);
          }
      } else {
        for (int i : scopes[std::size_t(node - num_vars())])
          if (!seen[std::size_t(i)]) {
            seen[std::size_t(i)] = true;
            stack.push_back(i);
          }
      }
    }
    return count == n;
  }

  /// Total number of joint assignments, saturating at cap+1 to avoid overflow.
  std::int64_t joint_state_count(std::int64_t cap = std::int64_t(1) << 62) const {
    std::int64_t n = 1;
    for (int c : cardinalities) {
      n *= c;
      if (n > cap) return cap + 1;
    }
    return n;
  }
};

enum class EdgeKind { var_to_fac, fac_to_var };

/// One directed message slot m_{i->a} or m_{a->i}.
struct DirectedEdge {
  EdgeKind kind;
  int factor;
  int variable;
};

/// Flattened undirected edge index of a factor graph. Edge e corresponds to
/// one (factor, scope position) pair; both message directions share the id.
/// Edge ids enumerate factors in order and scope positions within a factor
/// in order, which fixes every reduction order in the engines.
struct EdgeIndex {
  std::vector<int> factor;               // per edge
  std::vector<int> var;                  // per edge
  std::vector<int> pos;                  // per edge: position of var in scope
  std::vector<std::vector<int>> var_edges;     // per variable: incident edge ids
  std::vector<std::vector<int>> factor_edges;  // per factor: edge ids in scope order

  explicit EdgeIndex(const FactorGraph& g) {
    var_edges.resize(std::size_t(g.num_vars()));
    factor_edges.resize(std::size_t(g.num_factors()));
    for (int a = 0; a < g.num_factors(); ++a) {
      const auto& scope = g.scopes[std::size_t(a)];
      for (int k = 0; k < int(scope.size()); ++k) {
        int e = int(factor.size());
        factor.push_back(a);
        var.push_back(scope[std::size_t(k)]);
        pos.push_back(k);
        var_edges[std::size_t(scope[std::size_t(k)])].push_back(e);
        factor_edges[std::size_t(a)].push_back(e);
      }
    }
  }

  int num_edges() const { return int(factor.size()); }

  DirectedEdge directed(int e, EdgeKind kind) const {
    return DirectedEdge{kind, factor[std::size_t(e)], var[std::size_t(e)]};
  }
};

}  // namespace fg
