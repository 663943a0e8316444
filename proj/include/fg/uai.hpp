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
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fg/factor_graph.hpp"

namespace fg {

/// Thrown for malformed UAI input.
struct UaiError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UaiOptions {
  /// Zero table entries are clamped to this linear value before taking logs.
  /// Set clamp_zeros=false to reject zero entries instead.
  bool clamp_zeros = true;
  double zero_clamp = 1e-30;
};

namespace detail {
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}
  std::string next(const char* what) {
    std::string tok;
    if (!(in_ >> tok)) throw UaiError(std::string("uai: unexpected end of input, expected ") + what);
    return tok;
  }
  long long next_int(const char* what) {
    std::string tok = next(what);
    try {
      std::size_t used = 0;
      long long v = std::stoll(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw UaiError(std::string("uai: expected integer for ") + what + ", got '" + tok + "'");
    }
  }
  double next_real(const char* what) {
    std::string tok = next(what);
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw UaiError(std::string("uai: expected real for ") + what + ", got '" + tok + "'");
    }
  }

 private:
  std::istream& in_;
};
}  // namespace detail

/// Parse the MARKOV network format: preamble (variable count, cardinalities,
/// factor count, scopes), then per factor an entry count and that many
/// linear-space reals in row-major order over the scope. Values are converted
/// to log space here.
inline FactorGraph read_uai(std::istream& in, const UaiOptions& opt = {}) {
  detail::TokenReader tok(in);
  std::string kind = tok.next("network type");
  if (kind != "MARKOV") throw UaiError("uai: expected MARKOV header, got '" + kind + "'");

  long long n = tok.next_int("variable count");
  if (n < 0) throw UaiError("uai: negative variable count");
  std::vector<int> cards(static_cast<std::size_t>(n));
  for (auto& c : cards) {
    long long v = tok.next_int("cardinality");
    if (v <= 0) throw UaiError("uai: non-positive cardinality");
    c = int(v);
  }

  long long m = tok.next_int("factor count");
  if (m < 0) throw UaiError("uai: negative factor count");
  std::vector<std::vector<int>> scopes(static_cast<std::size_t>(m));
  for (auto& scope : scopes) {
    long long k = tok.next_int("scope size");
    if (k <= 0) throw UaiError("uai: non-positive scope size");
    scope.resize(std::size_t(k));
    for (auto& v : scope) {
      long long idx = tok.next_int("scope variable");
      if (idx < 0 || idx >= n) throw UaiError("uai: scope variable out of range");
      v = int(idx);
    }
  }

  std::vector<DenseTensor> pots;
  pots.reserve(std::size_t(m));
  for (long long a = 0; a < m; ++a) {
    std::vector<int> shape;
    long long expect = 1;
    for (int v : scopes[std::size_t(a)]) {
      shape.push_back(cards[std::size_t(v)]);
      expect *= cards[std::size_t(v)];
    }
    long long count = tok.next_int("table entry count");
    if (count != expect)
      throw UaiError("uai: table length " + std::to_string(count) + " != product of scope cardinalities " +
                     std::to_string(expect));
    std::vector<double> data(static_cast<std::size_t>(count));
    for (auto& x : data) {
      double v = tok.next_real("table entry");
      if (v < 0.0) throw UaiError("uai: negative potential entry");
      if (v == 0.0) {
        if (!opt.clamp_zeros) throw UaiError("uai: zero potential entry with clamping disabled");
        v = opt.zero_clamp;
      }
      x = std::log(v);
    }
    pots.emplace_back(std::move(shape), std::move(data));
  }
  return FactorGraph(std::move(cards), std::move(scopes), std::move(pots));
}

inline FactorGraph read_uai_string(const std::string& text, const UaiOptions& opt = {}) {
  std::istringstream in(text);
  return read_uai(in, opt);
}

namespace detail {
inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

/// Emit the MARKOV format, linear-space values at 17 significant digits.
/// Output is deterministic byte for byte for a given graph.
inline void write_uai(std::ostream& out, const FactorGraph& g) {
  out << "MARKOV\n";
  out << g.num_vars() << "\n";
  for (int i = 0; i < g.num_vars(); ++i)
    out << g.cardinalities[std::size_t(i)] << (i + 1 == g.num_vars() ? "\n" : " ");
  if (g.num_vars() == 0) out << "\n";
  out << g.num_factors() << "\n";
  for (const auto& scope : g.scopes) {
    out << scope.size();
    for (int v : scope) out << " " << v;
    out << "\n";
  }
  for (const auto& pot : g.log_potentials) {
    out << pot.size() << "\n";
    for (std::size_t f = 0; f < pot.data.size(); ++f)
      out << detail::format_real(std::exp(pot.data[f])) << (f + 1 == pot.data.size() ? "\n" : " ");
  }
}

inline std::string write_uai_string(const FactorGraph& g) {
  std::ostringstream out;
  write_uai(out, g);
  return out.str();
}

}  // namespace fg
