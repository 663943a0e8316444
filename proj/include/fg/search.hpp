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
#include <chrono>
#include <cstdint>
#include <set>
#include <vector>

#include "fg/factor_graph.hpp"
#include "fg/rng.hpp"

namespace fg {

/// Local search over single-variable-flip neighborhoods, keeping the K
/// best-scoring states seen so far.
struct SearchConfig {
  int cache_size = 10;  // K
  std::int64_t max_steps = 100000;
  double max_seconds = 3600.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (cache_size < 1) throw std::invalid_argument("SearchConfig: cache size must be >= 1");
  }
};

struct SearchResult {
  std::vector<int> assignment;
  double log_score = 0.0;
  std::int64_t steps = 0;
  std::vector<double> best_score_history;  // best cached score after each step
};

namespace detail {
/// Order: higher score first; equal scores resolved by lexicographically
/// smaller assignment. Exact double comparison keeps the order total and
/// deterministic.
struct CacheOrder {
  bool operator()(const std::pair<double, std::vector<int>>& a,
                  const std::pair<double, std::vector<int>>& b) const {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  }
};
}  // namespace detail

/// Beam search: the cache starts with one seeded-random state; every step
/// expands all single-variable flips of every cached state, keeps the top K
/// of (cache + neighbors), and stops when the cache no longer changes or a
/// step/time cap is hit. Returns the best cached state.
inline SearchResult beam_search(const FactorGraph& g, const SearchConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  Rng rng(cfg.seed ^ 0xBEA3C0DEULL);

  std::vector<int> state(std::size_t(g.num_vars()));
  for (int i = 0; i < g.num_vars(); ++i)
    state[std::size_t(i)] = int(rng.next_below(std::uint64_t(g.cardinalities[std::size_t(i)])));

  using Entry = std::pair<double, std::vector<int>>;
  std::set<Entry, detail::CacheOrder> cache;
  cache.emplace(g.log_score(state), state);

  SearchResult result;
  while (result.steps < cfg.max_steps) {
    std::set<Entry, detail::CacheOrder> pool = cache;
    for (const auto& [score, base] : cache) {
      std::vector<int> neighbor = base;
      for (int i = 0; i < g.num_vars(); ++i) {
        const int old = neighbor[std::size_t(i)];
        for (int v = 0; v < g.cardinalities[std::size_t(i)]; ++v) {
          if (v == old) continue;
          neighbor[std::size_t(i)] = v;
          pool.emplace(g.log_score(neighbor), neighbor);
        }
        neighbor[std::size_t(i)] = old;
      }
    }
    std::set<Entry, detail::CacheOrder> next;
    for (const auto& e : pool) {
      next.insert(e);
      if (int(next.size()) == cfg.cache_size) break;
    }
    ++result.steps;
    bool changed = next != cache;
    cache = std::move(next);
    result.best_score_history.push_back(cache.begin()->first);
    if (!changed) break;
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    if (elapsed > cfg.max_seconds) break;
  }

  result.assignment = cache.begin()->second;
  result.log_score = cache.begin()->first;
  return result;
}

/// Best-first search is beam search with a cache of one.
inline SearchResult best_first_search(const FactorGraph& g, SearchConfig cfg) {
  cfg.cache_size = 1;
  return beam_search(g, cfg);
}

}  // namespace fg
