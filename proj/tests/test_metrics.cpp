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
#include <limits>

#include "fg/metrics.hpp"
#include "testutil.hpp"

using fg::compute_metrics;
using fg::ExactResult;
using fg::InstanceEstimate;

namespace {
ExactResult label_of(std::vector<std::vector<double>> marginals, double map_score = 1.0) {
  ExactResult r;
  r.marginals = std::move(marginals);
  r.map_log_score = map_score;
  r.log_Z = 0.0;
  return r;
}
}  // namespace

TEST(Metrics, PerfectEstimatesScoreZero) {
  ExactResult lab = label_of({{0.5, 0.5}, {0.25, 0.75}}, 2.0);
  lab.map_assignment = {0, 1};
  InstanceEstimate est;
  est.marginals = lab.marginals;
  est.map_assignment = lab.map_assignment;
  est.map_log_score = lab.map_log_score;
  fg::Metrics m = compute_metrics({est}, {lab});
  EXPECT_DOUBLE_EQ(m.kl, 0.0);
  EXPECT_DOUBLE_EQ(m.rmse, 0.0);
  EXPECT_DOUBLE_EQ(m.uai_score, 0.0);
}

TEST(Metrics, KlHandValue) {
  ExactResult lab = label_of({{0.5, 0.5}});
  InstanceEstimate est;
  est.marginals = {{0.25, 0.75}};
  fg::Metrics m = compute_metrics({est}, {lab});
  double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  EXPECT_NEAR(m.kl, expected, 1e-12);
  EXPECT_NEAR(m.kl, 0.14384, 1e-5);
  EXPECT_NEAR(m.rmse, 0.25, 1e-12);
}

TEST(Metrics, ZeroTruthEntriesContributeNothing) {
  ExactResult lab = label_of({{1.0, 0.0}});
  InstanceEstimate est;
  est.marginals = {{1.0, 0.0}};
  fg::Metrics m = compute_metrics({est}, {lab});
  EXPECT_DOUBLE_EQ(m.kl, 0.0);
}

TEST(Metrics, InfiniteLogScoreReportedAsInfiniteUaiScore) {
  // A decoded assignment that lands on a true zero-probability entry has
  // log-score -inf; the dataset metric is then infinite.
  ExactResult lab = label_of({{0.5, 0.5}}, 2.0);
  InstanceEstimate est;
  est.map_assignment = {0};
  est.map_log_score = -std::numeric_limits<double>::infinity();
  fg::Metrics m = compute_metrics({est}, {lab});
  EXPECT_TRUE(std::isinf(m.uai_score));
}

TEST(Metrics, MisalignedListsRejected) {
  EXPECT_THROW(compute_metrics({InstanceEstimate{}}, {}), std::invalid_argument);
}

TEST(Metrics, MapOnlyEstimatesLeaveMarginalMetricsNaN) {
  ExactResult lab = label_of({{0.5, 0.5}}, 4.0);
  InstanceEstimate est;
  est.map_assignment = {0};
  est.map_log_score = 3.0;
  fg::Metrics m = compute_metrics({est}, {lab});
  EXPECT_TRUE(std::isnan(m.kl));
  EXPECT_TRUE(std::isnan(m.rmse));
  EXPECT_NEAR(m.uai_score, 0.25, 1e-12);
}
