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

#include "fg/factor_graph.hpp"
#include "fg/rng.hpp"
#include "fg/tensor.hpp"

namespace fg {

namespace detail {
inline bool is_permutation_of(const std::vector<int>& p, int n) {
  if (int(p.size()) != n) return false;
  std::vector<bool> seen(std::size_t(n), false);
  for (int x : p) {
    if (x < 0 || x >= n || seen[std::size_t(x)]) return false;
    seen[std::size_t(x)] = true;
  }
  return true;
}

inline std::vector<int> invert_perm(const std::vector<int>& p) {
  std::vector<int> inv(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) inv[std::size_t(p[k])] = int(k);
  return inv;
}
}  // namespace detail

/// Explicit realization of one factor-graph isomorphism: global relabelings
/// of factors and variables, a reordering of each factor's variable axes and
/// a reordering of each variable's states. Each entry maps old index -> new
/// index. The identity witness maps any graph to itself.
struct PermutationWitness {
  std::vector<int> factor_perm;                   // [M] -> [M]
  std::vector<int> var_perm;                      // [N] -> [N]
  std::vector<std::vector<int>> local_perms;      // per factor: axis k -> axis
  std::vector<std::vector<int>> assignment_perms; // per variable: state -> state

  static PermutationWitness identity(const FactorGraph& g) {
    PermutationWitness w;
    w.factor_perm.resize(std::size_t(g.num_factors()));
    for (int a = 0; a < g.num_factors(); ++a) w.factor_perm[std::size_t(a)] = a;
    w.var_perm.resize(std::size_t(g.num_vars()));
    for (int i = 0; i < g.num_vars(); ++i) w.var_perm[std::size_t(i)] = i;
    for (const auto& scope : g.scopes) {
      std::vector<int> p(scope.size());
      for (std::size_t k = 0; k < p.size(); ++k) p[k] = int(k);
      w.local_perms.push_back(std::move(p));
    }
    for (int c : g.cardinalities) {
      std::vector<int> p(static_cast<std::size_t>(c));
      for (std::size_t s = 0; s < p.size(); ++s) p[s] = int(s);
      w.assignment_perms.push_back(std::move(p));
    }
    return w;
  }

  void check_sized_for(const FactorGraph& g) const {
    if (!detail::is_permutation_of(factor_perm, g.num_factors()) ||
        !detail::is_permutation_of(var_perm, g.num_vars()))
      throw std::invalid_argument("witness: global permutation size mismatch");
    if (int(local_perms.size()) != g.num_factors() ||
        int(assignment_perms.size()) != g.num_vars())
      throw std::invalid_argument("witness: local/assignment list size mismatch");
    for (int a = 0; a < g.num_factors(); ++a)
      if (!detail::is_permutation_of(local_perms[std::size_t(a)],
                                     int(g.scopes[std::size_t(a)].size())))
        throw std::invalid_argument("witness: local permutation invalid");
    for (int i = 0; i < g.num_vars(); ++i)
      if (!detail::is_permutation_of(assignment_perms[std::size_t(i)],
                                     g.cardinalities[std::size_t(i)]))
        throw std::invalid_argument("witness: assignment permutation invalid");
  }

  /// Witness of the inverse isomorphism (indexed by the image graph).
  PermutationWitness inverse() const {
    PermutationWitness inv;
    inv.factor_perm = detail::invert_perm(factor_perm);
    inv.var_perm = detail::invert_perm(var_perm);
    inv.local_perms.resize(local_perms.size());
    for (std::size_t a = 0; a < local_perms.size(); ++a)
      inv.local_perms[std::size_t(factor_perm[a])] = detail::invert_perm(local_perms[a]);
    inv.assignment_perms.resize(assignment_perms.size());
    for (std::size_t i = 0; i < assignment_perms.size(); ++i)
      inv.assignment_perms[std::size_t(var_perm[i])] =
          detail::invert_perm(assignment_perms[i]);
    return inv;
  }
};

/// Composition: apply `first`, then `second` (on first's image).
inline PermutationWitness compose(const PermutationWitness& first,
                                  const PermutationWitness& second) {
  PermutationWitness w;
  w.factor_perm.resize(first.factor_perm.size());
  for (std::size_t a = 0; a < w.factor_perm.size(); ++a)
    w.factor_perm[a] = second.factor_perm[std::size_t(first.factor_perm[a])];
  w.var_perm.resize(first.var_perm.size());
  for (std::size_t i = 0; i < w.var_perm.size(); ++i)
    w.var_perm[i] = second.var_perm[std::size_t(first.var_perm[i])];
  w.local_perms.resize(first.local_perms.size());
  for (std::size_t a = 0; a < first.local_perms.size(); ++a) {
    const auto& l1 = first.local_perms[a];
    const auto& l2 = second.local_perms[std::size_t(first.factor_perm[a])];
    std::vector<int> l(l1.size());
    for (std::size_t k = 0; k < l1.size(); ++k) l[k] = l2[std::size_t(l1[k])];
    w.local_perms[a] = std::move(l);
  }
  w.assignment_perms.resize(first.assignment_perms.size());
  for (std::size_t i = 0; i < first.assignment_perms.size(); ++i) {
    const auto& p1 = first.assignment_perms[i];
    const auto& p2 = second.assignment_perms[std::size_t(first.var_perm[i])];
    std::vector<int> p(p1.size());
    for (std::size_t s = 0; s < p1.size(); ++s) p[s] = p2[std::size_t(p1[s])];
    w.assignment_perms[i] = std::move(p);
  }
  return w;
}

/// Materialize the isomorphic image of g under w. All three symmetries are
/// applied: indices relabeled, potential axes transposed together with the
/// scope, and each axis's states reordered by the owning variable's
/// assignment permutation.
inline FactorGraph apply_witness(const FactorGraph& g, const PermutationWitness& w) {
  w.check_sized_for(g);
  FactorGraph out;
  out.cardinalities.resize(std::size_t(g.num_vars()));
  for (int i = 0; i < g.num_vars(); ++i)
    out.cardinalities[std::size_t(w.var_perm[std::size_t(i)])] =
        g.cardinalities[std::size_t(i)];
  out.scopes.resize(std::size_t(g.num_factors()));
  out.log_potentials.resize(std::size_t(g.num_factors()));
  for (int a = 0; a < g.num_factors(); ++a) {
    const int b = w.factor_perm[std::size_t(a)];
    const auto& scope = g.scopes[std::size_t(a)];
    const auto& local = w.local_perms[std::size_t(a)];
    const int arity = int(scope.size());

    std::vector<int> new_scope(static_cast<std::size_t>(arity));
    std::vector<int> new_shape(static_cast<std::size_t>(arity));
    for (int k = 0; k < arity; ++k) {
      int new_axis = local[std::size_t(k)];
      int old_var = scope[std::size_t(k)];
      new_scope[std::size_t(new_axis)] = w.var_perm[std::size_t(old_var)];
      new_shape[std::size_t(new_axis)] = g.cardinalities[std::size_t(old_var)];
    }

    const DenseTensor& pot = g.log_potentials[std::size_t(a)];
    DenseTensor new_pot = DenseTensor::zeros(new_shape);
    const auto new_strides = new_pot.strides();
    std::vector<int> idx(std::size_t(arity), 0);
    std::int64_t flat = 0;
    do {
      std::int64_t nf = 0;
      for (int k = 0; k < arity; ++k) {
        int new_axis = local[std::size_t(k)];
        int new_state =
            w.assignment_perms[std::size_t(scope[std::size_t(k)])][std::size_t(idx[std::size_t(k)])];
        nf += new_strides[std::size_t(new_axis)] * new_state;
      }
      new_pot.data[std::size_t(nf)] = pot.data[std::size_t(flat)];
      ++flat;
    } while (next_assignment(idx, pot.shape));

    out.scopes[std::size_t(b)] = std::move(new_scope);
    out.log_potentials[std::size_t(b)] = std::move(new_pot);
  }
  return out;
}

/// True iff w maps g onto g2 exactly: identical cardinalities and scopes
/// after relabeling, potentials equal entrywise within tol. Structural
/// mismatches (including an ill-sized witness) return false.
inline bool verify_witness(const FactorGraph& g, const FactorGraph& g2,
                           const PermutationWitness& w, double tol = 1e-12) {
  FactorGraph image;
  try {
    image = apply_witness(g, w);
  } catch (const std::invalid_argument&) {
    return false;
  }
  if (image.cardinalities != g2.cardinalities) return false;
  if (image.scopes != g2.scopes) return false;
  for (int a = 0; a < image.num_factors(); ++a) {
    const auto& p = image.log_potentials[std::size_t(a)];
    const auto& q = g2.log_potentials[std::size_t(a)];
    if (p.shape != q.shape) return false;
    for (std::size_t f = 0; f < p.data.size(); ++f)
      if (!(std::abs(p.data[f] - q.data[f]) <= tol)) return false;
  }
  return true;
}

/// Uniformly random witness with the requested component classes active;
/// inactive classes stay identity. Used by the symmetry audits.
inline PermutationWitness random_witness(const FactorGraph& g, Rng& rng,
                                         bool global, bool local, bool assignment) {
  PermutationWitness w = PermutationWitness::identity(g);
  if (global) {
    w.factor_perm = rng.permutation(g.num_factors());
    w.var_perm = rng.permutation(g.num_vars());
  }
  if (local)
    for (int a = 0; a < g.num_factors(); ++a)
      w.local_perms[std::size_t(a)] = rng.permutation(int(g.scopes[std::size_t(a)].size()));
  if (assignment)
    for (int i = 0; i < g.num_vars(); ++i)
      w.assignment_perms[std::size_t(i)] = rng.permutation(g.cardinalities[std::size_t(i)]);
  return w;
}

}  // namespace fg
