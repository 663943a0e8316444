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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "fg/dataset.hpp"
#include "fg/generators.hpp"
#include "fg/uai.hpp"

using fg::DatasetSpec;
using fg::Family;

TEST(Generators, GridFactorCounts) {
  DatasetSpec spec;
  spec.n = 4;
  spec.count = 1;
  spec.seed = 1;
  auto data = fg::gen_dataset(spec);
  const fg::FactorGraph& g = data[0].graph;
  EXPECT_EQ(g.num_vars(), 16);
  EXPECT_EQ(g.num_factors(), 40);  // 16 unary + 24 grid edges
  int unary = 0, pairwise = 0;
  for (const auto& s : g.scopes) (s.size() == 1 ? unary : pairwise)++;
  EXPECT_EQ(unary, 16);
  EXPECT_EQ(pairwise, 24);
  EXPECT_TRUE(g.is_connected());
}

TEST(Generators, ZeroSigmaGivesUniformMarginals) {
  DatasetSpec spec;
  spec.n = 3;
  spec.count = 3;
  spec.seed = 2;
  spec.sigma_b = 0.0;
  spec.sigma_j = 0.0;
  for (const auto& inst : fg::gen_dataset(spec)) {
    ASSERT_TRUE(inst.label.has_value());
    for (const auto& m : inst.label->marginals) {
      EXPECT_NEAR(m[0], 0.5, 1e-12);
      EXPECT_NEAR(m[1], 0.5, 1e-12);
    }
  }
}

// Hand enumeration of a two-variable chain with a single coupling J=1 and no
// biases: Z = 2e + 2/e, uniform marginals, aligned pairs e^2 more likely.
TEST(Generators, SingleEdgeChainHandValues) {
  fg::FactorGraph g = fg::make_grid_ising(1, 2, {0.0, 0.0}, {1.0});
  ASSERT_EQ(g.num_vars(), 2);
  ASSERT_EQ(g.num_factors(), 3);
  fg::ExactResult r = fg::enumerate(g);
  EXPECT_NEAR(r.log_Z, std::log(2.0 * std::exp(1.0) + 2.0 * std::exp(-1.0)), 1e-12);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(r.marginals[std::size_t(i)][0], 0.5, 1e-12);
    EXPECT_NEAR(r.marginals[std::size_t(i)][1], 0.5, 1e-12);
  }
  // Joint probabilities from the coupling factor: aligned vs misaligned.
  double z = 2.0 * std::exp(1.0) + 2.0 * std::exp(-1.0);
  double p_aligned = std::exp(1.0) / z;
  double p_crossed = std::exp(-1.0) / z;
  EXPECT_NEAR(p_aligned / p_crossed, std::exp(2.0), 1e-9);
  EXPECT_NEAR(std::exp(g.log_score(std::vector<int>{0, 0}) - r.log_Z), p_aligned, 1e-12);
  EXPECT_NEAR(std::exp(g.log_score(std::vector<int>{0, 1}) - r.log_Z), p_crossed, 1e-12);
}

TEST(Generators, IsingPotentialsAreSymmetric) {
  DatasetSpec spec;
  spec.n = 3;
  spec.count = 5;
  spec.seed = 3;
  for (const auto& inst : fg::gen_dataset(spec))
    for (const auto& pot : inst.graph.log_potentials)
      if (pot.rank() == 2) {
        EXPECT_DOUBLE_EQ(pot.data[1], pot.data[2]);
      }
}

TEST(Generators, AsymZeroCouplingGivesAllOnesTable) {
  fg::FactorGraph g = fg::make_grid_asym(1, 2, {0.0, 0.0}, {{0.0, 0.0}});
  const fg::DenseTensor& pot = g.log_potentials[2];
  for (double x : pot.data) EXPECT_DOUBLE_EQ(x, 0.0);  // ln 1
}

TEST(Generators, AsymTableMatchesCouplingFormula) {
  fg::FactorGraph g = fg::make_grid_asym(1, 2, {0.0, 0.0}, {{1.0, 0.0}});
  const fg::DenseTensor& pot = g.log_potentials[2];
  EXPECT_DOUBLE_EQ(pot.data[0], 1.0);    // ln e^{Jij+Jji} = 1
  EXPECT_DOUBLE_EQ(pot.data[1], -2.0);   // ln e^{-2 Jij}
  EXPECT_DOUBLE_EQ(pot.data[2], 0.0);    // ln e^{-2 Jji} = ln 1
  EXPECT_DOUBLE_EQ(pot.data[3], 1.0);
}

TEST(Generators, AsymPotentialsAlmostNeverSymmetric) {
  DatasetSpec spec;
  spec.family = Family::asym_bmrf;
  spec.n = 3;
  spec.count = 90;  // 12 pairwise factors each
  spec.seed = 4;
  int asym = 0, total = 0;
  for (const auto& inst : fg::gen_dataset(spec))
    for (const auto& pot : inst.graph.log_potentials)
      if (pot.rank() == 2) {
        ++total;
        if (pot.data[1] != pot.data[2]) ++asym;
      }
  ASSERT_GE(total, 1000);
  EXPECT_GT(double(asym) / double(total), 0.99);
}

TEST(Generators, DeterministicGivenSeed) {
  DatasetSpec spec;
  spec.family = Family::asym_bmrf;
  spec.n = 3;
  spec.count = 4;
  spec.seed = 99;
  auto a = fg::gen_dataset(spec);
  auto b = fg::gen_dataset(spec);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_EQ(a[k].graph.scopes, b[k].graph.scopes);
    for (std::size_t f = 0; f < a[k].graph.log_potentials.size(); ++f)
      EXPECT_EQ(a[k].graph.log_potentials[f].data, b[k].graph.log_potentials[f].data);
  }
  DatasetSpec other = spec;
  other.seed = 100;
  auto c = fg::gen_dataset(other);
  EXPECT_NE(a[0].graph.log_potentials[0].data, c[0].graph.log_potentials[0].data);
}

TEST(Generators, LabelsSumToOne) {
  DatasetSpec spec;
  spec.family = Family::asym_bmrf;
  spec.n = 3;
  spec.count = 5;
  spec.seed = 7;
  for (const auto& inst : fg::gen_dataset(spec)) {
    ASSERT_TRUE(inst.label.has_value());
    for (const auto& m : inst.label->marginals) {
      double s = 0.0;
      for (double x : m) s += x;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Generators, SpecValidation) {
  DatasetSpec bad;
  bad.n = 1;
  EXPECT_THROW(fg::gen_dataset(bad), std::invalid_argument);
  bad.n = 3;
  bad.count = 0;
  EXPECT_THROW(fg::gen_dataset(bad), std::invalid_argument);
}

TEST(Dataset, SeededSplitIsDeterministicAndSeventyThirty) {
  std::vector<int> data(100);
  for (int k = 0; k < 100; ++k) data[std::size_t(k)] = k;
  auto [tr1, te1] = fg::seeded_split(data, 77);
  auto [tr2, te2] = fg::seeded_split(data, 77);
  EXPECT_EQ(tr1, tr2);
  EXPECT_EQ(te1, te2);
  EXPECT_EQ(tr1.size(), 70u);
  EXPECT_EQ(te1.size(), 30u);
  auto [tr3, te3] = fg::seeded_split(data, 78);
  EXPECT_NE(tr1, tr3);
  EXPECT_THROW(fg::seeded_split(data, 1, 0.0), std::invalid_argument);
}

TEST(Dataset, SaveLoadRoundTrip) {
  DatasetSpec spec;
  spec.n = 3;
  spec.count = 3;
  spec.seed = 11;
  auto data = fg::gen_dataset(spec);
  auto dir = std::filesystem::temp_directory_path() / "fg_dataset_test";
  std::filesystem::remove_all(dir);
  fg::save_dataset(dir, spec, data);

  auto loaded = fg::load_dataset(dir);
  ASSERT_EQ(loaded.size(), data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    ASSERT_EQ(loaded[k].graph.scopes, data[k].graph.scopes);
    ASSERT_TRUE(loaded[k].label.has_value());
    EXPECT_NEAR(loaded[k].label->log_Z, data[k].label->log_Z, 1e-12);
    for (std::size_t a = 0; a < data[k].graph.log_potentials.size(); ++a)
      for (std::size_t f = 0; f < data[k].graph.log_potentials[a].data.size(); ++f)
        EXPECT_NEAR(loaded[k].graph.log_potentials[a].data[f],
                    data[k].graph.log_potentials[a].data[f], 1e-12);
  }
  std::filesystem::remove_all(dir);
}
