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

#include "fg/uai.hpp"
#include "testutil.hpp"

TEST(Uai, MinimalFileParses) {
  fg::FactorGraph g = fg::read_uai_string("MARKOV\n1\n2\n1\n1 0\n2\n1.0 3.0\n");
  ASSERT_EQ(g.num_vars(), 1);
  ASSERT_EQ(g.num_factors(), 1);
  EXPECT_EQ(g.cardinalities[0], 2);
  EXPECT_EQ(g.scopes[0], (std::vector<int>{0}));
  EXPECT_NEAR(g.log_potentials[0].data[0], std::log(1.0), 1e-15);
  EXPECT_NEAR(g.log_potentials[0].data[1], std::log(3.0), 1e-15);
}

TEST(Uai, RoundTripPreservesPotentials) {
  fg::Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    fg::FactorGraph g = fgtest::random_graph(rng);
    fg::FactorGraph h = fg::read_uai_string(fg::write_uai_string(g));
    ASSERT_EQ(h.cardinalities, g.cardinalities);
    ASSERT_EQ(h.scopes, g.scopes);
    for (std::size_t a = 0; a < g.log_potentials.size(); ++a)
      for (std::size_t f = 0; f < g.log_potentials[a].data.size(); ++f)
        EXPECT_NEAR(h.log_potentials[a].data[f], g.log_potentials[a].data[f], 1e-12);
  }
}

TEST(Uai, WriteReadWriteIsFixpoint) {
  fg::Rng rng(6);
  fg::FactorGraph g = fgtest::random_graph(rng);
  std::string once = fg::write_uai_string(g);
  std::string twice = fg::write_uai_string(fg::read_uai_string(once));
  EXPECT_EQ(once, twice);
}

TEST(Uai, BadTableLengthRejected) {
  EXPECT_THROW(fg::read_uai_string("MARKOV\n1\n2\n1\n1 0\n3\n1.0 3.0 1.0\n"), fg::UaiError);
}

TEST(Uai, RejectsNonMarkovHeader) {
  EXPECT_THROW(fg::read_uai_string("BAYES\n1\n2\n1\n1 0\n2\n1.0 3.0\n"), fg::UaiError);
}

TEST(Uai, TruncatedInputRejected) {
  EXPECT_THROW(fg::read_uai_string("MARKOV\n2\n2 2\n1\n2 0 1\n4\n1.0 2.0\n"), fg::UaiError);
}

TEST(Uai, ZeroEntriesClampedByDefault) {
  fg::FactorGraph g = fg::read_uai_string("MARKOV\n1\n2\n1\n1 0\n2\n0.0 3.0\n");
  EXPECT_NEAR(g.log_potentials[0].data[0], std::log(1e-30), 1e-9);
}

TEST(Uai, ZeroEntriesRejectedWhenClampDisabled) {
  fg::UaiOptions opt;
  opt.clamp_zeros = false;
  EXPECT_THROW(fg::read_uai_string("MARKOV\n1\n2\n1\n1 0\n2\n0.0 3.0\n", opt), fg::UaiError);
}

TEST(Uai, NegativeEntryAlwaysRejected) {
  EXPECT_THROW(fg::read_uai_string("MARKOV\n1\n2\n1\n1 0\n2\n-1.0 3.0\n"), fg::UaiError);
}
