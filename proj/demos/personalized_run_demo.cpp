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

// Runs each aggregator on the same synthetic ensemble with two privacy
// groups and reports how many labels it produces before a budget runs out.

#include <cmath>
#include <cstdio>
#include <utility>
#include <vector>

#include "ppate/ppate.hpp"

int main() {
  using namespace ppate;
  const VotingConfig base = MnistConfig();
  const std::vector<std::pair<double, double>> shares = {{std::log(2.0), 0.5},
                                                         {std::log(4.0), 0.5}};
  const auto budgets = SharesToCounts(shares, 60000);

  RunOptions options;
  options.stop_at_exhaustion = true;

  std::printf("%-12s %8s %8s\n", "variant", "labels", "std");
  for (auto kind : {AggregatorKind::kConfident, AggregatorKind::kUpsampling,
                    AggregatorKind::kVanishing, AggregatorKind::kWeighting}) {
    RunConfig run;
    run.plan = MakePlan(kind, budgets, base);
    run.source.accuracy = 0.9;
    run.source.difficulty_spread = 2.0;
    run.source.num_queries = 2000;
    run.ensembles = 2;
    run.processes = 3;
    run.options = options;
    const auto summary = RepeatAndAggregate(run);
    std::printf("%-12s %8.1f %8.1f\n", std::string(KindName(kind)).c_str(), summary.mean_labels,
                summary.std_labels);
  }
  return 0;
}
