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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fg/exact.hpp"
#include "fg/factor_graph.hpp"
#include "fg/rng.hpp"
#include "fg/train.hpp"

namespace fg {

enum class Family { ising, asym_bmrf };

inline const char* family_name(Family f) {
  return f == Family::ising ? "ising" : "asym_bmrf";
}
inline Family family_from_name(const std::string& s) {
  if (s == "ising") return Family::ising;
  if (s == "asym" || s == "asym_bmrf") return Family::asym_bmrf;
  throw std::invalid_argument("unknown family: " + s);
}

/// Seeded grid dataset description. Each instance is drawn from its own
/// substream keyed by the instance index, so generation order (and
/// parallelism) can never change the data.
struct DatasetSpec {
  Family family = Family::ising;
  int n = 4;  // grid side
  int count = 1;
  std::uint64_t seed = 0;
  double sigma_b = 0.25;
  double sigma_j = 1.0;

  void validate() const {
    if (n < 2) throw std::invalid_argument("DatasetSpec: grid side must be >= 2");
    if (count < 1) throw std::invalid_argument("DatasetSpec: count must be >= 1");
  }
};

namespace detail {

/// Grid edges in a fixed order: scan cells row-major; at each cell emit the
/// edge to the right neighbor, then the edge to the cell below.
inline std::vector<std::pair<int, int>> grid_edges(int rows, int cols) {
  std::vector<std::pair<int, int>> edges;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int v = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(v, v + 1);
      if (r + 1 < rows) edges.emplace_back(v, v + cols);
    }
  return edges;
}

}  // namespace detail

/// Spin-pair grid model with explicit parameters. States map spins as
/// x=+1 -> state 0 and x=-1 -> state 1, so the unary log potential is
/// [+b, -b] and the coupling log potential is [[J, -J], [-J, J]].
inline FactorGraph make_grid_ising(int rows, int cols, const std::vector<double>& biases,
                                   const std::vector<double>& couplings) {
  const auto edges = detail::grid_edges(rows, cols);
  if (int(biases.size()) != rows * cols || couplings.size() != edges.size())
    throw std::invalid_argument("make_grid_ising: parameter count mismatch");
  std::vector<int> cards(std::size_t(rows * cols), 2);
  std::vector<std::vector<int>> scopes;
  std::vector<DenseTensor> pots;
  for (int i = 0; i < rows * cols; ++i) {
    scopes.push_back({i});
    pots.push_back(DenseTensor({2}, {biases[std::size_t(i)], -biases[std::size_t(i)]}));
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    double j = couplings[e];
    scopes.push_back({edges[e].first, edges[e].second});
    pots.push_back(DenseTensor({2, 2}, {j, -j, -j, j}));
  }
  return FactorGraph(std::move(cards), std::move(scopes), std::move(pots));
}

/// Grid model whose pairwise factor in linear space is
/// [[e^{Jij+Jji}, e^{-2 Jij}], [e^{-2 Jji}, e^{Jij+Jji}]] with independent
/// Jij, Jji per edge; unary bias factors as in the spin model.
inline FactorGraph make_grid_asym(int rows, int cols, const std::vector<double>& biases,
                                  const std::vector<std::pair<double, double>>& couplings) {
  const auto edges = detail::grid_edges(rows, cols);
  if (int(biases.size()) != rows * cols || couplings.size() != edges.size())
    throw std::invalid_argument("make_grid_asym: parameter count mismatch");
  std::vector<int> cards(std::size_t(rows * cols), 2);
  std::vector<std::vector<int>> scopes;
  std::vector<DenseTensor> pots;
  for (int i = 0; i < rows * cols; ++i) {
    scopes.push_back({i});
    pots.push_back(DenseTensor({2}, {biases[std::size_t(i)], -biases[std::size_t(i)]}));
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto [jij, jji] = couplings[e];
    scopes.push_back({edges[e].first, edges[e].second});
    pots.push_back(DenseTensor({2, 2}, {jij + jji, -2.0 * jij, -2.0 * jji, jij + jji}));
  }
  return FactorGraph(std::move(cards), std::move(scopes), std::move(pots));
}

/// One instance of a spec: biases first (variable order), then one normal
/// draw per grid edge (spin model) or two (asymmetric model, Jij then Jji).
inline FactorGraph gen_instance(const DatasetSpec& spec, int index) {
  Rng rng = Rng(spec.seed).substream(std::uint64_t(index) ^
                                     (spec.family == Family::ising ? 0x1511ULL : 0xA52ULL));
  const int n = spec.n;
  std::vector<double> biases(std::size_t(n * n));
  for (auto& b : biases) b = spec.sigma_b * rng.next_normal();
  const auto edges = detail::grid_edges(n, n);
  if (spec.family == Family::ising) {
    std::vector<double> couplings(edges.size());
    for (auto& j : couplings) j = spec.sigma_j * rng.next_normal();
    return make_grid_ising(n, n, biases, couplings);
  }
  std::vector<std::pair<double, double>> couplings(edges.size());
  for (auto& [jij, jji] : couplings) {
    jij = spec.sigma_j * rng.next_normal();
    jji = spec.sigma_j * rng.next_normal();
  }
  return make_grid_asym(n, n, biases, couplings);
}

/// Full dataset with enumeration labels attached where the joint state space
/// fits under the cap; above the cap label.has_value() is false.
struct GeneratedInstance {
  FactorGraph graph;
  std::optional<ExactResult> label;
};

inline std::vector<GeneratedInstance> gen_dataset(const DatasetSpec& spec,
                                                  std::int64_t oracle_cap = std::int64_t(1)
                                                                            << 24) {
  spec.validate();
  std::vector<GeneratedInstance> out;
  out.reserve(std::size_t(spec.count));
  for (int k = 0; k < spec.count; ++k) {
    GeneratedInstance inst;
    inst.graph = gen_instance(spec, k);
    if (inst.graph.joint_state_count(oracle_cap) <= oracle_cap)
      inst.label = enumerate(inst.graph, oracle_cap);
    out.push_back(std::move(inst));
  }
  return out;
}

/// Labeled view for training; throws if any instance lacks labels.
inline std::vector<LabeledGraph> as_labeled(const std::vector<GeneratedInstance>& data) {
  std::vector<LabeledGraph> out;
  out.reserve(data.size());
  for (const auto& inst : data) {
    if (!inst.label) throw std::runtime_error("instance lacks oracle labels");
    out.push_back({inst.graph, *inst.label});
  }
  return out;
}

}  // namespace fg
