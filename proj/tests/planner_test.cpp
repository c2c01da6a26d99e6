//
// Copyright 2026 The ppate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "ppate/planner.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "gtest/gtest.h"

namespace ppate {
namespace {

const double kLog2 = std::log(2.0);

TEST(UpsamplingTest, DoubledBudget) {
  const std::vector<BudgetCount> budgets = {{kLog2, 30000}, {std::log(4.0), 30000}};
  EXPECT_EQ(UpsamplingDuplicates(budgets, 1e-6, 64), (std::vector<int>{1, 2}));
  const auto plan = PlanUpsampling(budgets, MnistConfig());
  EXPECT_DOUBLE_EQ(plan.upsampling_gain, 1.5);
  EXPECT_EQ(plan.config.k, 375);
  EXPECT_DOUBLE_EQ(plan.config.sigma2, 60.0);
  EXPECT_DOUBLE_EQ(plan.config.sigma1, 225.0);
  EXPECT_DOUBLE_EQ(plan.config.threshold, 300.0);
  EXPECT_EQ(plan.teachers.size(), 375u);
  EXPECT_EQ(plan.groups[0].sensitivity.value(), 1.0);
  EXPECT_EQ(plan.groups[1].sensitivity.value(), 2.0);
  for (const auto& t : plan.teachers) EXPECT_EQ(t.group_id, kMixedGroup);
}

TEST(UpsamplingTest, DuplicatesFollowTheEpsilonRatio) {
  // ln 8 = 3 ln 2 and ln 16 = 4 ln 2.
  const std::vector<BudgetCount> log8 = {{kLog2, 1}, {std::log(8.0), 1}};
  EXPECT_EQ(UpsamplingDuplicates(log8, 1e-6, 64), (std::vector<int>{1, 3}));
  const std::vector<BudgetCount> log16 = {{kLog2, 1}, {std::log(16.0), 1}};
  EXPECT_EQ(UpsamplingDuplicates(log16, 1e-6, 64), (std::vector<int>{1, 4}));
}

TEST(UpsamplingTest, SingleBudgetIsTrivial) {
  const std::vector<BudgetCount> budgets = {{kLog2, 60000}};
  const auto plan = PlanUpsampling(budgets, MnistConfig());
  EXPECT_EQ(plan.groups.size(), 1u);
  EXPECT_EQ(plan.groups[0].param, 1.0);
  EXPECT_EQ(plan.upsampling_gain, 1.0);
  EXPECT_EQ(plan.config, MnistConfig());
}

TEST(UpsamplingTest, RationalRatiosNeedAMultiplier) {
  const std::vector<BudgetCount> budgets = {{1.0, 10}, {1.5, 10}, {2.5, 10}};
  EXPECT_EQ(UpsamplingDuplicates(budgets, 1e-9, 64), (std::vector<int>{2, 3, 5}));
}

TEST(UpsamplingTest, IncommensurateBudgetsFail) {
  const std::vector<BudgetCount> budgets = {{1.0, 10}, {std::sqrt(2.0), 10}};
  try {
    UpsamplingDuplicates(budgets, 1e-6, 64);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kPlanInfeasible);
    EXPECT_NE(std::string(e.what()).find("duplicate cap"), std::string::npos);
  }
  // A looser precision finds 7/5.
  EXPECT_EQ(UpsamplingDuplicates(budgets, 0.02, 64), (std::vector<int>{5, 7}));
}

TEST(UpsamplingTest, RatiosMatchBudgetsWithinPrecision) {
  std::mt19937_64 gen(4);
  for (int i = 0; i < 300; ++i) {
    const int a = std::uniform_int_distribution<int>(1, 8)(gen);
    const int b = std::uniform_int_distribution<int>(1, 8)(gen);
    const double unit = std::uniform_real_distribution<double>(0.1, 3.0)(gen);
    const std::vector<BudgetCount> budgets = {{a * unit, 5}, {b * unit, 7}};
    const auto dup = UpsamplingDuplicates(budgets, 1e-6, 64);
    EXPECT_NEAR(static_cast<double>(dup[1]) / dup[0], static_cast<double>(b) / a,
                1e-6 * static_cast<double>(b) / a);
    EXPECT_EQ(std::gcd(dup[0], dup[1]), 1);
  }
}

TEST(UpsamplingTest, InvalidInputs) {
  const std::vector<BudgetCount> zero = {{0.0, 1}};
  EXPECT_THROW(UpsamplingDuplicates(zero, 1e-6, 64), Error);
  const std::vector<BudgetCount> ok = {{1.0, 1}};
  EXPECT_THROW(UpsamplingDuplicates(ok, 0.0, 64), Error);
  EXPECT_THROW(UpsamplingDuplicates(ok, 0.5, 64), Error);
  EXPECT_THROW(UpsamplingDuplicates({}, 1e-6, 64), Error);
}

TEST(VanishingTest, Frequencies) {
  const std::vector<double> eps = {kLog2, std::log(4.0)};
  const auto f4 = PlanVanishing(eps, 4.0);
  EXPECT_NEAR(f4[0], 1.0 / 16, 1e-15);
  EXPECT_EQ(f4[1], 1.0);
  const auto f2 = PlanVanishing(eps, 2.0);
  EXPECT_NEAR(f2[0], 0.25, 1e-15);
  EXPECT_EQ(f2[1], 1.0);
  const std::vector<double> single = {kLog2};
  EXPECT_EQ(PlanVanishing(single), (std::vector<double>{1.0}));
}

TEST(VanishingTest, RunScalesNoiseByActiveFraction) {
  const std::vector<BudgetCount> budgets = {{kLog2, 30000}, {std::log(4.0), 30000}};
  const auto plan = PlanVanishingRun(budgets, MnistConfig());
  double active = 0.0;
  for (const auto& t : plan.teachers) active += t.participation;
  const double fraction = active / 250.0;
  EXPECT_NEAR(fraction, (125 / 16.0 + 125) / 250.0, 1e-12);
  EXPECT_NEAR(plan.config.sigma2, 40.0 * std::sqrt(fraction), 1e-12);
  EXPECT_NEAR(plan.config.threshold, 200.0 * fraction, 1e-12);
  for (const auto& g : plan.groups) EXPECT_EQ(g.sensitivity.value(), 1.0);
}

TEST(WeightingTest, TwoBudgets) {
  const std::vector<double> eps = {kLog2, std::log(4.0)};
  const std::vector<int> counts = {125, 125};
  const auto w = PlanWeighting(eps, counts);
  EXPECT_NEAR(w[0], 2.0 / 3, 1e-15);
  EXPECT_NEAR(w[1], 4.0 / 3, 1e-15);
}

TEST(WeightingTest, EqualBudgetsGiveUnitWeights) {
  const std::vector<double> eps = {0.7, 0.7, 0.7};
  const std::vector<int> counts = {10, 20, 30};
  EXPECT_EQ(PlanWeighting(eps, counts), (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(WeightingTest, ThreeBudgetsFollowBudgetRatios) {
  const std::vector<double> eps = {kLog2, std::log(8.0), std::log(16.0)};
  const std::vector<int> counts = {100, 100, 100};
  const auto w = PlanWeighting(eps, counts);
  // mean = 8 log 2 / 3, so weights are 3/8, 9/8, 12/8.
  EXPECT_NEAR(w[0], 3.0 / 8, 1e-14);
  EXPECT_NEAR(w[1], 9.0 / 8, 1e-14);
  EXPECT_NEAR(w[2], 12.0 / 8, 1e-14);
  EXPECT_NEAR(w[2] / w[0], eps[2] / eps[0], 1e-14);
}

TEST(WeightingTest, WeightsSumToTeacherCount) {
  std::mt19937_64 gen(8);
  for (int i = 0; i < 200; ++i) {
    const int groups = std::uniform_int_distribution<int>(1, 5)(gen);
    std::vector<BudgetCount> budgets;
    for (int g = 0; g < groups; ++g) {
      budgets.push_back({std::uniform_real_distribution<double>(0.1, 5.0)(gen),
                         std::uniform_int_distribution<long>(1, 1000)(gen)});
    }
    VotingConfig base = MnistConfig();
    base.k = std::uniform_int_distribution<int>(groups, 400)(gen);
    const auto plan = PlanWeightingRun(budgets, base);
    double sum = 0.0;
    for (const auto& t : plan.teachers) sum += t.weight;
    EXPECT_NEAR(sum, base.k, 1e-9);
    EXPECT_EQ(plan.teachers.size(), static_cast<std::size_t>(base.k));
  }
}

TEST(WeightingTest, InvalidInputs) {
  const std::vector<double> eps = {1.0};
  const std::vector<int> two = {1, 1};
  EXPECT_THROW(PlanWeighting(eps, two), Error);
  const std::vector<int> none = {0};
  EXPECT_THROW(PlanWeighting(eps, none), Error);
}

TEST(AllocateTeachersTest, ProportionalWithAtLeastOne) {
  const std::vector<BudgetCount> budgets = {{1.0, 1}, {2.0, 999}};
  const auto per = AllocateTeachers(budgets, 10);
  EXPECT_EQ(per, (std::vector<int>{1, 9}));
  const std::vector<BudgetCount> thirds = {{1.0, 100}, {2.0, 100}, {3.0, 100}};
  const auto t = AllocateTeachers(thirds, 250);
  EXPECT_EQ(t[0] + t[1] + t[2], 250);
  for (int n : t) EXPECT_GE(n, 83);
  EXPECT_THROW(AllocateTeachers(thirds, 2), Error);
}

TEST(BaselineTest, PicksTheConfiguredBudget) {
  const std::vector<BudgetCount> budgets = {{1.0, 100}, {3.0, 300}};
  PlannerOptions opts;
  EXPECT_EQ(PlanBaseline(AggregatorKind::kConfident, budgets, MnistConfig(), opts)
                .groups[0].budget.epsilon(), 1.0);
  opts.baseline = BaselineBudget::kMax;
  EXPECT_EQ(PlanBaseline(AggregatorKind::kConfident, budgets, MnistConfig(), opts)
                .groups[0].budget.epsilon(), 3.0);
  opts.baseline = BaselineBudget::kAverage;
  const auto plan = PlanBaseline(AggregatorKind::kPlain, budgets, MnistConfig(), opts);
  EXPECT_DOUBLE_EQ(plan.groups[0].budget.epsilon(), 2.5);
  EXPECT_EQ(plan.groups[0].num_points, 400);
  EXPECT_EQ(plan.kind, AggregatorKind::kPlain);
}

TEST(SharesToCountsTest, RemainderGoesToLastShare) {
  const std::vector<std::pair<double, double>> shares = {{1.0, 1.0 / 3}, {2.0, 2.0 / 3}};
  const auto counts = SharesToCounts(shares, 100);
  EXPECT_EQ(counts[0].count, 33);
  EXPECT_EQ(counts[1].count, 67);
}

TEST(ScheduleTest, FullParticipation) {
  const std::vector<double> freq(20, 1.0);
  const auto s = ScheduleVanishing(freq, 100, 50, 3);
  for (int q = 0; q < 100; ++q) {
    for (int t = 0; t < 20; ++t) EXPECT_TRUE(s.Active(q, t));
  }
}

TEST(ScheduleTest, SixteenTeachersAtOneSixteenth) {
  const std::vector<double> freq(16, 1.0 / 16);
  const auto s = ScheduleVanishing(freq, 160, 16, 5);
  for (int q = 0; q < 160; ++q) {
    int active = 0;
    for (int t = 0; t < 16; ++t) active += s.Active(q, t);
    EXPECT_EQ(active, 1) << q;
  }
  for (int window = 0; window < 10; ++window) {
    for (int t = 0; t < 16; ++t) {
      int on = 0;
      for (int q = 16 * window; q < 16 * (window + 1); ++q) on += s.Active(q, t);
      EXPECT_EQ(on, 1);
    }
  }
}

TEST(ScheduleTest, HalfFrequencyIsExact) {
  const std::vector<double> freq = {0.5, 0.5, 0.5};
  const auto s = ScheduleVanishing(freq, 100, 50, 7);
  for (int t = 0; t < 3; ++t) {
    int on = 0;
    for (int q = 0; q < 100; ++q) on += s.Active(q, t);
    EXPECT_EQ(on, 50);
  }
}

TEST(ScheduleTest, LongRunRateMatchesFrequency) {
  std::mt19937_64 gen(12);
  std::vector<double> freq;
  for (int t = 0; t < 60; ++t) freq.push_back(1.0 / std::uniform_int_distribution<int>(1, 20)(gen));
  const int n = 2000;
  const auto s = ScheduleVanishing(freq, n, 50, 9);
  for (int t = 0; t < 60; ++t) {
    int on = 0;
    for (int q = 0; q < n; ++q) on += s.Active(q, t);
    const int period = static_cast<int>(std::lround(1.0 / freq[t]));
    EXPECT_NEAR(static_cast<double>(on) / n, freq[t], 1.0 / period) << t;
  }
}

TEST(ScheduleTest, SameSeedSameSchedule) {
  const std::vector<double> freq = {0.25, 0.25, 0.25, 0.25, 1.0};
  const auto a = ScheduleVanishing(freq, 300, 40, 11);
  const auto b = ScheduleVanishing(freq, 300, 40, 11);
  for (int q = 0; q < 300; ++q) {
    for (int t = 0; t < 5; ++t) EXPECT_EQ(a.Active(q, t), b.Active(q, t));
  }
}

TEST(ScheduleTest, InvalidFrequencies) {
  const std::vector<double> zero = {0.0};
  EXPECT_THROW(ScheduleVanishing(zero, 10, 5, 1), Error);
  const std::vector<double> big = {1.5};
  EXPECT_THROW(ScheduleVanishing(big, 10, 5, 1), Error);
}

}  // namespace
}  // namespace ppate
