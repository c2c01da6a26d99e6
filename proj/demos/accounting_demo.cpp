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

// Prices one query under the loose and the data-dependent bound, then
// composes many such queries and converts the total to (epsilon, delta).

#include <cstdio>
#include <vector>

#include "ppate/ppate.hpp"

int main() {
  using namespace ppate;
  const auto orders = DefaultOrders();
  const double sigma = 40.0;
  const double delta = 1e-5;

  // 250 teachers, strong consensus on class 3.
  const std::vector<double> counts = {4, 2, 1, 230, 3, 2, 1, 3, 2, 2};
  const auto loose = LooseBoundCurve(Sensitivity(1.0), sigma, orders);
  const auto tight = PerQueryCost(counts, Sensitivity(1.0), sigma, orders);
  std::printf("deviation bound q = %.3e\n", DeviationProbabilityBound(counts, sigma));
  std::printf("%6s %12s %12s\n", "alpha", "loose", "tight");
  for (std::size_t i = 0; i < orders.size(); i += 8) {
    std::printf("%6.0f %12.4e %12.4e\n", orders[i], loose.costs()[i], tight.costs()[i]);
  }

  RdpCurve loose_total(orders);
  RdpCurve tight_total(orders);
  for (int q = 0; q < 1000; ++q) {
    loose_total.Accumulate(loose);
    tight_total.Accumulate(tight);
  }
  const auto a = RdpToDp(loose_total, delta);
  const auto b = RdpToDp(tight_total, delta);
  std::printf("1000 queries: loose eps = %.3f (alpha %.0f), tight eps = %.3f (alpha %.0f)\n",
              a.epsilon, a.best_alpha, b.epsilon, b.best_alpha);
  return 0;
}
