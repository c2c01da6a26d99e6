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

#include "ppate/rdp_accountant.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.hpp"

namespace ppate {
namespace {

constexpr double kLogInvDelta = 11.512925464970229;  // ln(1e5)

TEST(RdpOrderTest, RejectsOrdersAtOrBelowOne) {
  EXPECT_THROW(RdpOrder(1.0), Error);
  EXPECT_THROW(RdpOrder(0.5), Error);
  EXPECT_THROW(RdpOrder(std::numeric_limits<double>::infinity()), Error);
  EXPECT_EQ(RdpOrder(1.5).value(), 1.5);
}

TEST(SensitivityTest, MustBePositive) {
  EXPECT_THROW(Sensitivity(0.0), Error);
  EXPECT_THROW(Sensitivity(-1.0), Error);
  EXPECT_THROW(Sensitivity(std::nan("")), Error);
}

TEST(PrivacyBudgetTest, ValidatesRanges) {
  EXPECT_THROW(PrivacyBudget(-1.0, 1e-5), Error);
  EXPECT_THROW(PrivacyBudget(1.0, 0.0), Error);
  EXPECT_THROW(PrivacyBudget(1.0, 1.5), Error);
  const PrivacyBudget b(0.5, 1e-5);
  EXPECT_EQ(b.epsilon(), 0.5);
  EXPECT_EQ(b.delta(), 1e-5);
}

TEST(GaussianRdpTest, Examples) {
  EXPECT_DOUBLE_EQ(GaussianRdp(Sensitivity(1), 1.0, RdpOrder(2)), 1.0);
  EXPECT_DOUBLE_EQ(GaussianRdp(Sensitivity(2), 40.0, RdpOrder(10)), 0.0125);
  EXPECT_LT(GaussianRdp(Sensitivity(1), 1e12, RdpOrder(50)), 1e-22);
}

TEST(GaussianRdpTest, RejectsNonPositiveSigma) {
  try {
    GaussianRdp(Sensitivity(1), 0.0, RdpOrder(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kInvalidParameter);
  }
  EXPECT_THROW(LooseBound(Sensitivity(1), -3.0, RdpOrder(2)), Error);
}

TEST(GaussianRdpTest, MatchesRenyiDivergenceQuadrature) {
  for (double d : {0.5, 1.0, 3.0}) {
    for (double s : {0.7, 10.0, 40.0}) {
      for (double a : {2.0, 7.5, 50.0}) {
        const double want = static_cast<double>(oracle::RenyiGaussianShift(d, s, a));
        EXPECT_NEAR(GaussianRdp(Sensitivity(d), s, RdpOrder(a)), want, 1e-12 * want);
      }
    }
  }
}

TEST(LooseBoundTest, Examples) {
  EXPECT_DOUBLE_EQ(LooseBound(Sensitivity(1), 40.0, RdpOrder(8)), 0.005);
  EXPECT_DOUBLE_EQ(LooseBound(Sensitivity(3), 40.0, RdpOrder(8)), 0.045);
}

TEST(LooseBoundTest, LinearInOrderAndQuadraticInSensitivity) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.5, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double d = u(gen), s = 10 * u(gen), a = 1.0 + 10 * u(gen), c = u(gen);
    const double slope = LooseBound(Sensitivity(d), s, RdpOrder(2)) / 2.0;
    EXPECT_NEAR(LooseBound(Sensitivity(d), s, RdpOrder(a)), a * slope, 1e-14 * a * slope);
    const double base = LooseBound(Sensitivity(d), s, RdpOrder(a));
    EXPECT_NEAR(LooseBound(Sensitivity(c * d), s, RdpOrder(a)), c * c * base, 1e-12 * c * c * base);
    EXPECT_NEAR(LooseBound(Sensitivity(c * d), c * s, RdpOrder(a)), base, 1e-12 * base);
  }
}

TEST(RdpCurveTest, ValidatesShape) {
  EXPECT_THROW(RdpCurve({2.0, 3.0}, {0.1}), Error);
  EXPECT_THROW(RdpCurve({3.0, 2.0}), Error);
  EXPECT_THROW(RdpCurve({2.0}, {-0.1}), Error);
  EXPECT_EQ(RdpCurve(DefaultOrders()).size(), 49u);
  EXPECT_TRUE(RdpCurve(std::vector<double>{}).empty());
}

TEST(ComposeTest, Examples) {
  const RdpCurve a({2.0}, {0.1});
  const RdpCurve b({2.0}, {0.2});
  EXPECT_DOUBLE_EQ(Compose(a, b).costs()[0], 0.3);

  const auto orders = DefaultOrders();
  const auto loose = LooseBoundCurve(Sensitivity(1), 40.0, orders);
  EXPECT_EQ(Compose(loose, RdpCurve(orders)), loose);

  RdpCurve total(orders);
  for (int i = 0; i < 400; ++i) total.Accumulate(loose);
  EXPECT_NEAR(total.costs()[6], 2.0, 1e-12);  // order 8
}

TEST(ComposeTest, GridMismatchIsAnError) {
  try {
    Compose(RdpCurve({2.0, 3.0}), RdpCurve({2.0, 4.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kGridMismatch);
  }
}

TEST(ComposeTest, NeverDecreasesAnEntry) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto orders = DefaultOrders();
  RdpCurve total(orders);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> c;
    for (std::size_t j = 0; j < orders.size(); ++j) c.push_back(u(gen));
    const RdpCurve next = Compose(total, RdpCurve(orders, c));
    for (std::size_t j = 0; j < orders.size(); ++j) EXPECT_GE(next.costs()[j], total.costs()[j]);
    total = next;
  }
}

TEST(RdpToDpTest, Examples) {
  const auto single = RdpToDp(RdpCurve({2.0}, {1.0}), 1e-5);
  EXPECT_NEAR(single.epsilon, 1.0 + kLogInvDelta, 1e-12);
  EXPECT_NEAR(single.epsilon, 12.5129, 1e-4);
  EXPECT_EQ(single.best_alpha, 2.0);

  const auto zero = RdpToDp(RdpCurve(DefaultOrders()), 1e-5);
  EXPECT_NEAR(zero.epsilon, kLogInvDelta / 49.0, 1e-15);
  EXPECT_NEAR(zero.epsilon, 0.23495, 1e-5);
  EXPECT_EQ(zero.best_alpha, 50.0);
}

TEST(RdpToDpTest, AgreesWithGridScan) {
  const auto orders = DefaultOrders();
  const auto curve = LooseBoundCurve(Sensitivity(1), 40.0, orders);
  const std::vector<double> costs(curve.costs().begin(), curve.costs().end());
  const auto [eps, alpha] = oracle::ScanConversion(orders, costs, 1e-5);
  const auto dp = RdpToDp(curve, 1e-5);
  EXPECT_NEAR(dp.epsilon, static_cast<double>(eps), 1e-15);
  EXPECT_EQ(dp.best_alpha, static_cast<double>(alpha));
}

TEST(RdpToDpTest, TiesGoToTheSmallerOrder) {
  // 2 + ln(1/delta) and 3 - ... arranged to give the same value at both orders.
  const double delta = std::exp(-2.0);
  const RdpCurve curve({2.0, 3.0}, {1.0, 2.0});  // 1 + 2/1 = 3, 2 + 2/2 = 3
  const auto dp = RdpToDp(curve, delta);
  EXPECT_DOUBLE_EQ(dp.epsilon, 3.0);
  EXPECT_EQ(dp.best_alpha, 2.0);
}

TEST(RdpToDpTest, Errors) {
  try {
    RdpToDp(RdpCurve(std::vector<double>{}), 1e-5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kEmptyInput);
  }
  EXPECT_THROW(RdpToDp(RdpCurve({2.0}), 0.0), Error);
  EXPECT_THROW(RdpToDp(RdpCurve({2.0}), 1.1), Error);
  EXPECT_NO_THROW(RdpToDp(RdpCurve({2.0}), 1.0));
}

TEST(DeviationProbabilityTest, Examples) {
  const std::vector<double> tied = {5, 5, 5, 5};
  EXPECT_EQ(DeviationProbabilityBound(tied, 40.0), 1.0);
  const std::vector<double> pair = {7, 7};
  EXPECT_DOUBLE_EQ(DeviationProbabilityBound(pair, 40.0), 0.5);
  const std::vector<double> gap = {200, 0};
  // 1/2 erfc(2.5) = 2.0348e-4.
  EXPECT_NEAR(DeviationProbabilityBound(gap, 40.0), 2.0348e-4, 1e-8);
  EXPECT_NEAR(DeviationProbabilityBound(gap, 40.0), static_cast<double>(oracle::Erfc(2.5L) / 2),
              1e-18);
}

TEST(DeviationProbabilityTest, ErfcMatchesSeriesOracle) {
  for (double x = 0.0; x <= 26.0; x += 0.25) {
    const std::vector<double> c = {2 * x, 0.0};
    const double got = DeviationProbabilityBound(c, 1.0);
    const double want = static_cast<double>(oracle::Erfc(x) / 2);
    EXPECT_NEAR(got, want, 1e-12) << x;
    if (want > 0) {
      EXPECT_NEAR(got, want, 1e-13 * want) << x;
    }
  }
}

TEST(DeviationProbabilityTest, LogFormSurvivesUnderflow) {
  const std::vector<double> c = {250, 0, 0};
  const double log_q = LogDeviationProbabilityBound(c, 2.0);  // erfc(62.5)
  const double want = static_cast<double>(std::log(oracle::Erfc(62.5L)));
  EXPECT_TRUE(std::isfinite(log_q));
  EXPECT_NEAR(log_q, want + std::log(2.0) - std::log(2.0), 1e-9 * std::abs(want));
  // Either side of the switch to the asymptotic expansion.
  for (double x : {24.99, 25.0, 25.01, 26.0}) {
    const std::vector<double> v = {2 * x, 0};
    EXPECT_NEAR(LogDeviationProbabilityBound(v, 1.0),
                static_cast<double>(std::log(oracle::Erfc(x) / 2)), 1e-10)
        << x;
  }
}

TEST(DeviationProbabilityTest, MonotoneInGapAndSigma) {
  std::vector<double> c = {100, 60, 30, 10};
  double prev = DeviationProbabilityBound(c, 40.0);
  for (int i = 0; i < 50; ++i) {
    c[0] += 5;
    const double next = DeviationProbabilityBound(c, 40.0);
    EXPECT_LE(next, prev);
    prev = next;
  }
  prev = 0.0;
  for (double s = 1.0; s < 200.0; s *= 1.3) {
    const double next = DeviationProbabilityBound(c, s);
    EXPECT_GE(next, prev);
    prev = next;
  }
}

TEST(DeviationProbabilityTest, RejectsBadVotes) {
  const std::vector<double> empty;
  EXPECT_THROW(DeviationProbabilityBound(empty, 1.0), Error);
  const std::vector<double> negative = {1.0, -1.0};
  EXPECT_THROW(DeviationProbabilityBound(negative, 1.0), Error);
}

TEST(TightBoundTest, ZeroDeviationCostsNothing) {
  const auto eps = TightBound({0.0, RdpOrder(20), RdpOrder(20), 0.0125, 0.0125, RdpOrder(8)});
  ASSERT_TRUE(eps.has_value());
  EXPECT_EQ(*eps, 0.0);
}

TEST(TightBoundTest, CertainDeviationIsInapplicable) {
  EXPECT_FALSE(TightBound({1.0, RdpOrder(20), RdpOrder(20), 0.0125, 0.0125, RdpOrder(8)}));
}

TEST(TightBoundTest, TargetAboveFirstOrderIsInapplicable) {
  EXPECT_FALSE(TightBound({1e-4, RdpOrder(5), RdpOrder(5), 5 / 1600.0, 5 / 1600.0, RdpOrder(8)}));
}

TEST(TightBoundTest, SmallDeviationBeatsLooseBound) {
  const double loose20 = 20 / 1600.0;
  const auto eps = TightBound({1e-4, RdpOrder(20), RdpOrder(20), loose20, loose20, RdpOrder(8)});
  ASSERT_TRUE(eps.has_value());
  EXPECT_LT(*eps, LooseBound(Sensitivity(1), 40.0, RdpOrder(8)));
  const double direct =
      static_cast<double>(oracle::DirectTightBound(1e-4L, 20, 20, loose20, loose20, 8));
  EXPECT_NEAR(*eps, direct, 1e-12 * direct);
}

TEST(TightBoundTest, LogSpaceMatchesDirectEvaluation) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> logq(std::log(1e-8), std::log(0.05));
  std::uniform_real_distribution<double> order(2.0, 50.0);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const double q = std::exp(logq(gen));
    const double a2 = order(gen);
    const double a1 = a2 + 1.0;
    const double alpha = 1.0 + (a1 - 1.0) * std::uniform_real_distribution<double>(0.05, 1.0)(gen);
    const double e1 = a1 / 1600.0, e2 = a2 / 1600.0;
    const auto eps = TightBound({q, RdpOrder(a1), RdpOrder(a2), e1, e2, RdpOrder(alpha)});
    if (!eps || *eps == 0.0) continue;
    const double direct = static_cast<double>(oracle::DirectTightBound(q, a1, a2, e1, e2, alpha));
    EXPECT_NEAR(*eps, direct, 1e-9 * direct + 1e-15);
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

TEST(TightBoundTest, InvalidInputsAreErrors) {
  EXPECT_THROW(TightBound({-0.1, RdpOrder(2), RdpOrder(2), 0.1, 0.1, RdpOrder(2)}), Error);
  EXPECT_THROW(TightBound({0.1, RdpOrder(2), RdpOrder(2), -0.1, 0.1, RdpOrder(2)}), Error);
}

TEST(PerQueryCostTest, UnanimousVotesBeatLooseEverywhere) {
  const auto orders = DefaultOrders();
  const std::vector<double> votes = {250, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  const auto cost = PerQueryCost(votes, Sensitivity(1), 40.0, orders);
  const auto loose = LooseBoundCurve(Sensitivity(1), 40.0, orders);
  for (std::size_t i = 0; i < orders.size(); ++i) EXPECT_LT(cost.costs()[i], loose.costs()[i]);
  // With alpha1 = alpha2 = alpha the bound cannot go below the loose cost, so
  // the grid choice only helps below the two largest orders.
  const auto grid = PerQueryCost(votes, Sensitivity(1), 40.0, orders, OrderSelection::kGrid);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (orders[i] <= 48) {
      EXPECT_LT(grid.costs()[i], loose.costs()[i]);
    } else {
      EXPECT_LE(grid.costs()[i], loose.costs()[i]);
    }
  }
}

TEST(PerQueryCostTest, TiedVotesFallBackToLoose) {
  const auto orders = DefaultOrders();
  const std::vector<double> votes = {125, 125};
  EXPECT_EQ(PerQueryCost(votes, Sensitivity(1), 40.0, orders),
            LooseBoundCurve(Sensitivity(1), 40.0, orders));
}

TEST(PerQueryCostTest, NeverAboveLoose) {
  std::mt19937_64 gen(9);
  const auto orders = DefaultOrders();
  for (int i = 0; i < 500; ++i) {
    std::vector<double> votes(10, 0.0);
    for (int t = 0; t < 250; ++t) votes[std::uniform_int_distribution<int>(0, 9)(gen) % (1 + i % 10)] += 1;
    for (double d : {1.0, 2.0, 0.5}) {
      const auto cost = PerQueryCost(votes, Sensitivity(d), 40.0, orders);
      const auto loose = LooseBoundCurve(Sensitivity(d), 40.0, orders);
      for (std::size_t j = 0; j < orders.size(); ++j) {
        EXPECT_LE(cost.costs()[j], loose.costs()[j]);
        EXPECT_GE(cost.costs()[j], 0.0);
      }
    }
  }
}

TEST(PerQueryCostTest, DoubleSensitivityAtUnitCostEqualsHalfSigmaOnEffectiveNoise) {
  // With q held fixed (the deviation probability depends on the votes and the
  // real noise), a sensitivity of 2 is charged like noise sigma / 2.
  const auto orders = DefaultOrders();
  const std::vector<double> votes = {240, 5, 5};
  const double log_q = LogDeviationProbabilityBound(votes, 40.0);
  const auto cost = PerQueryCost(votes, Sensitivity(2), 40.0, orders);
  const double sigma_eff = 20.0;
  const double a2 = sigma_eff * std::sqrt(-log_q);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const double loose = orders[i] / (sigma_eff * sigma_eff);
    double want = loose;
    const auto tight = internal::TightBoundFromLogQ(log_q, a2 + 1, a2, (a2 + 1) / 400.0,
                                                    a2 / 400.0, orders[i]);
    if (tight) want = std::min(want, *tight);
    EXPECT_DOUBLE_EQ(cost.costs()[i], want);
    EXPECT_DOUBLE_EQ(LooseBoundCurve(Sensitivity(2), 40.0, orders).costs()[i],
                     LooseBoundCurve(Sensitivity(1), 20.0, orders).costs()[i]);
  }
}

TEST(PerQueryCostTest, PropagatesInvalidSigma) {
  const std::vector<double> votes = {3, 1};
  EXPECT_THROW(PerQueryCost(votes, Sensitivity(1), 0.0, DefaultOrders()), Error);
}

}  // namespace
}  // namespace ppate
