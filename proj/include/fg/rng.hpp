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
#include <numbers>
#include <vector>

namespace fg {

/// Deterministic, platform-independent 64-bit generator (SplitMix64,
/// Steele/Lea/Flood 2014). Every dataset, witness and initializer in this
/// library is seeded through this generator so that identical seeds produce
/// bit-identical results on any conforming platform. Substreams are derived
/// with substream(), never by sharing one running state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; never returns 0 (safe under log).
  double next_double_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Multiply-shift bound; deterministic, and the
  /// bias for the tiny n used here (< 2^32) is below 2^-32.
  std::uint64_t next_below(std::uint64_t n) {
    return std::uint64_t((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller (cosine branch only). One draw consumes
  /// exactly two next_u64() calls, which keeps stream layouts easy to state.
  double next_normal() {
    double u1 = next_double_pos();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Independent child stream keyed by (this stream's seed, key). Used for
  /// per-instance generation so order of generation never matters.
  Rng substream(std::uint64_t key) const {
    Rng mixer(state_ ^ (0xA0761D6478BD642FULL + key));
    std::uint64_t s = mixer.next_u64();
    mixer.next_u64();
    return Rng(s ^ key * 0xE7037ED1A0B428DBULL);
  }

  /// Fisher-Yates shuffle, deterministic given the stream.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = std::size_t(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Random permutation of [0, n).
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    shuffle(p);
    return p;
  }

 private:
  std::uint64_t state_;
};

}  // namespace fg
