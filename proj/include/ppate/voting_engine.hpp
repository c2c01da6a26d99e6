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

// The labeling loop: consensus check, noisy argmax, per-group privacy
// accounting over a grid of Renyi orders, conversion to (epsilon, delta)-DP
// after every query and detection of the first budget exhaustion.

#ifndef PPATE_VOTING_ENGINE_HPP_
#define PPATE_VOTING_ENGINE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ppate/aggregators.hpp"
#include "ppate/error.hpp"
#include "ppate/planner.hpp"
#include "ppate/random.hpp"
#include "ppate/rdp_accountant.hpp"
#include "ppate/teacher_simulator.hpp"

namespace ppate {

struct RunOptions {
  std::uint64_t voting_seed = 0;
  // Skip charging the consensus check. Weaker than the full analysis; for
  // ablations only.
  bool free_gate = false;
  // Stop right after the exhaustion query instead of running to the label cap.
  bool stop_at_exhaustion = false;
  // Keep a snapshot of every group's RDP curve in each record.
  bool record_curves = false;
  OrderSelection order_selection = OrderSelection::kReference;
  std::vector<double> orders = DefaultOrders();
  int reshuffle_period = 50;

  bool operator==(const RunOptions&) const = default;
};

struct GroupCost {
  double epsilon;
  double best_alpha;

  bool operator==(const GroupCost&) const = default;
};

struct QueryRecord {
  int query_index = 0;
  bool answered = false;
  int label = kAbstain;
  std::vector<GroupCost> groups;
  std::vector<RdpCurve> curves;  // only with RunOptions::record_curves

  bool operator==(const QueryRecord&) const = default;
};

struct Exhaustion {
  int query_index;
  int group_id;

  bool operator==(const Exhaustion&) const = default;
};

struct CostHistory {
  std::vector<int> group_ids;
  std::vector<double> budgets;  // epsilon per group
  std::vector<QueryRecord> records;
  int produced_label_count = 0;
  std::optional<Exhaustion> exhaustion;
  // Per group, the accumulated curve of its most expensive accounting unit.
  std::vector<RdpCurve> final_curves;

  bool operator==(const CostHistory&) const = default;
};

namespace internal {

// A set of data points that always pays the same cost: one per group, or one
// per teacher for vanishing where teachers of a group vote at different times.
struct AccountingUnit {
  int group;        // index into plan.groups
  int teacher;      // -1 unless per-teacher
  RdpCurve curve;
};

inline void CheckPlan(const VoteMatrix& votes, const PlanResult& plan) {
  plan.config.Validate();
  Require(!plan.groups.empty(), ErrorCategory::kInvalidParameter, "plan has no groups");
  Require(votes.num_teachers() == static_cast<int>(plan.teachers.size()),
          ErrorCategory::kDimensionMismatch,
          "vote matrix has " + std::to_string(votes.num_teachers()) +
              " teachers but the plan assigns " + std::to_string(plan.teachers.size()));
  Require(votes.num_classes() == plan.config.num_classes, ErrorCategory::kDimensionMismatch,
          "vote matrix has " + std::to_string(votes.num_classes()) +
              " classes but the plan expects " + std::to_string(plan.config.num_classes));
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    Require(plan.groups[g].group_id == static_cast<int>(g), ErrorCategory::kInvalidParameter,
            "group ids must be 0..n-1 in order");
  }
  for (const auto& t : plan.teachers) {
    Require(t.weight > 0.0 && t.participation > 0.0 && t.participation <= 1.0,
            ErrorCategory::kInvalidParameter, "invalid teacher weight or participation");
    if (plan.kind == AggregatorKind::kVanishing || plan.kind == AggregatorKind::kWeighting) {
      Require(t.group_id >= 0 && t.group_id < static_cast<int>(plan.groups.size()),
              ErrorCategory::kInvalidParameter,
              "every teacher must belong to exactly one group for this variant");
    }
  }
}

}  // namespace internal

inline CostHistory RunVoting(const VoteMatrix& votes, const PlanResult& plan,
                             const RunOptions& options = {}) {
  internal::CheckPlan(votes, plan);
  const VotingConfig& cfg = plan.config;
  const auto& orders = options.orders;
  const bool per_teacher = plan.kind == AggregatorKind::kVanishing;
  const int num_groups = static_cast<int>(plan.groups.size());
  const int num_queries = votes.num_queries();

  std::vector<internal::AccountingUnit> units;
  if (per_teacher) {
    for (const auto& t : plan.teachers) units.push_back({t.group_id, t.teacher_id, RdpCurve(orders)});
  } else {
    for (int g = 0; g < num_groups; ++g) units.push_back({g, -1, RdpCurve(orders)});
  }

  std::optional<VanishingSchedule> schedule;
  if (per_teacher) {
    std::vector<double> freq;
    for (const auto& t : plan.teachers) freq.push_back(t.participation);
    schedule = ScheduleVanishing(freq, num_queries, options.reshuffle_period,
                                 DeriveSeed(options.voting_seed, 0, StreamPurpose::kSchedule));
  }

  std::vector<RdpCurve> gate_cost;
  for (const auto& g : plan.groups) gate_cost.push_back(LooseBoundCurve(g.sensitivity, cfg.sigma1, orders));

  CostHistory history;
  for (const auto& g : plan.groups) {
    history.group_ids.push_back(g.group_id);
    history.budgets.push_back(g.budget.epsilon());
  }

  std::vector<std::optional<RdpCurve>> answer_cost(plan.groups.size());
  for (int q = 0; q < num_queries && history.produced_label_count < cfg.label_cap; ++q) {
    const auto active = schedule ? schedule->Row(q) : std::span<const std::uint8_t>{};
    const VoteVector vote_vector =
        BuildVoteVector(votes.Row(q), plan.teachers, plan.kind, active, cfg.num_classes);
    auto unit_active = [&](const internal::AccountingUnit& u) {
      return u.teacher < 0 || active[static_cast<std::size_t>(u.teacher)] != 0;
    };

    bool passed = true;
    if (UsesGate(plan.kind)) {
      Xoshiro256 gate_rng(options.voting_seed, static_cast<std::uint64_t>(q), StreamPurpose::kGate);
      passed = ConfidentGate(vote_vector, cfg.sigma1, cfg.threshold, gate_rng);
      if (!options.free_gate) {
        for (auto& u : units) {
          if (unit_active(u)) u.curve.Accumulate(gate_cost[u.group]);
        }
      }
    }

    QueryRecord record;
    record.query_index = q;
    record.answered = passed;
    if (passed) {
      Xoshiro256 answer_rng(options.voting_seed, static_cast<std::uint64_t>(q), StreamPurpose::kAnswer);
      record.label = GnMax(vote_vector, cfg.sigma2, answer_rng);
      std::fill(answer_cost.begin(), answer_cost.end(), std::nullopt);
      for (auto& u : units) {
        if (!unit_active(u)) continue;
        auto& cost = answer_cost[u.group];
        if (!cost) {
          cost = PerQueryCost(vote_vector.counts(), plan.groups[u.group].sensitivity, cfg.sigma2,
                              orders, options.order_selection);
        }
        u.curve.Accumulate(*cost);
      }
      ++history.produced_label_count;
    }

    record.groups.assign(plan.groups.size(), GroupCost{-1.0, 0.0});
    std::vector<int> worst(plan.groups.size(), -1);
    for (std::size_t i = 0; i < units.size(); ++i) {
      const auto& u = units[i];
      const DpConversion dp = RdpToDp(u.curve, plan.groups[u.group].budget.delta());
      if (dp.epsilon > record.groups[u.group].epsilon) {
        record.groups[u.group] = {dp.epsilon, dp.best_alpha};
        worst[u.group] = static_cast<int>(i);
      }
    }
    if (options.record_curves) {
      for (int g = 0; g < num_groups; ++g) record.curves.push_back(units[worst[g]].curve);
    }
    if (!history.exhaustion) {
      for (int g = 0; g < num_groups; ++g) {
        if (record.groups[g].epsilon > history.budgets[g]) {
          history.exhaustion = Exhaustion{q, history.group_ids[g]};
          break;
        }
      }
    }
    history.records.push_back(std::move(record));
    if (options.stop_at_exhaustion && history.exhaustion) break;
  }

  for (int g = 0; g < num_groups; ++g) {
    const internal::AccountingUnit* worst = nullptr;
    double worst_eps = -1.0;
    for (const auto& u : units) {
      if (u.group != g) continue;
      const double eps = RdpToDp(u.curve, plan.groups[g].budget.delta()).epsilon;
      if (eps > worst_eps) {
        worst_eps = eps;
        worst = &u;
      }
    }
    history.final_curves.push_back(worst->curve);
  }
  return history;
}

struct LabelCount {
  int labels;
  bool exhausted;

  bool operator==(const LabelCount&) const = default;
};

// Answered queries strictly before the exhaustion query; every answered query
// when no budget was exhausted.
inline LabelCount CountLabelsUntilExhaustion(const CostHistory& history) {
  int labels = 0;
  for (const auto& r : history.records) {
    if (history.exhaustion && r.query_index >= history.exhaustion->query_index) break;
    if (r.answered) ++labels;
  }
  return {labels, history.exhaustion.has_value()};
}

// Where the votes of a run come from: a fixed matrix that is replayed, or a
// synthetic ensemble drawn afresh for every ensemble repetition.
struct VoteSource {
  std::optional<VoteMatrix> matrix;
  double accuracy = 0.9;
  double difficulty_spread = 0.0;
  int num_queries = 9000;
};

struct RunConfig {
  PlanResult plan;
  VoteSource source;
  std::uint64_t ensemble_seed = 1;
  std::uint64_t voting_seed = 2;
  int ensembles = 1;
  int processes = 1;
  RunOptions options;
  int jobs = 1;
};

inline std::uint64_t EnsembleSeed(const RunConfig& config, int ensemble) {
  return DeriveSeed(config.ensemble_seed, static_cast<std::uint64_t>(ensemble),
                    StreamPurpose::kRepetition);
}

inline std::uint64_t VotingSeed(const RunConfig& config, int repetition) {
  return DeriveSeed(config.voting_seed, static_cast<std::uint64_t>(repetition),
                    StreamPurpose::kRepetition);
}

inline VoteMatrix EnsembleVotes(const RunConfig& config, int ensemble) {
  if (config.source.matrix) return *config.source.matrix;
  const auto seed = EnsembleSeed(config, ensemble);
  const auto& cfg = config.plan.config;
  const auto truth = SampleGroundTruth(config.source.num_queries, cfg.num_classes, seed);
  const auto synthetic =
      SyntheticEnsemble::Uniform(static_cast<int>(config.plan.teachers.size()), cfg.num_classes,
                                 config.source.accuracy, config.source.difficulty_spread);
  return SampleVotes(synthetic, truth, seed);
}

// Runs ensembles x processes independent voting processes. Repetition
// r = e * processes + p uses ensemble e's votes and its own voting seed; the
// result order is independent of `jobs`.
inline std::vector<CostHistory> RunRepetitions(const RunConfig& config) {
  Require(config.ensembles >= 1 && config.processes >= 1, ErrorCategory::kInvalidParameter,
          "repetitions must be >= 1");
  const int total = config.ensembles * config.processes;
  std::vector<CostHistory> histories(static_cast<std::size_t>(total));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(config.ensembles));

  auto run_ensemble = [&](int e) {
    try {
      const VoteMatrix votes = EnsembleVotes(config, e);
      for (int p = 0; p < config.processes; ++p) {
        const int r = e * config.processes + p;
        RunOptions options = config.options;
        options.voting_seed = VotingSeed(config, r);
        histories[static_cast<std::size_t>(r)] = RunVoting(votes, config.plan, options);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(e)] = std::current_exception();
    }
  };

  const int jobs = std::clamp(config.jobs, 1, config.ensembles);
  if (jobs == 1) {
    for (int e = 0; e < config.ensembles; ++e) run_ensemble(e);
  } else {
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (int e = w; e < config.ensembles; e += jobs) run_ensemble(e);
      });
    }
    for (auto& t : workers) t.join();
  }
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return histories;
}

struct RunSummary {
  std::vector<LabelCount> runs;
  double mean_labels = 0.0;
  double std_labels = 0.0;  // sample standard deviation; 0 for one run
  // mean_epsilon[g][q]: converted epsilon of group g after query q, averaged
  // over the runs that reached query q.
  std::vector<std::vector<double>> mean_epsilon;

  bool operator==(const RunSummary&) const = default;
};

inline RunSummary Summarize(std::span<const CostHistory> histories) {
  RunSummary summary;
  if (histories.empty()) return summary;
  double sum = 0.0;
  for (const auto& h : histories) {
    summary.runs.push_back(CountLabelsUntilExhaustion(h));
    sum += summary.runs.back().labels;
  }
  const double n = static_cast<double>(histories.size());
  summary.mean_labels = sum / n;
  if (histories.size() > 1) {
    double ss = 0.0;
    for (const auto& r : summary.runs) ss += (r.labels - summary.mean_labels) * (r.labels - summary.mean_labels);
    summary.std_labels = std::sqrt(ss / (n - 1.0));
  }

  const std::size_t groups = histories[0].group_ids.size();
  std::size_t longest = 0;
  for (const auto& h : histories) longest = std::max(longest, h.records.size());
  summary.mean_epsilon.assign(groups, std::vector<double>(longest, 0.0));
  std::vector<int> reached(longest, 0);
  for (const auto& h : histories) {
    for (std::size_t q = 0; q < h.records.size(); ++q) {
      ++reached[q];
      for (std::size_t g = 0; g < groups; ++g) summary.mean_epsilon[g][q] += h.records[q].groups[g].epsilon;
    }
  }
  for (auto& row : summary.mean_epsilon) {
    for (std::size_t q = 0; q < longest; ++q) row[q] /= reached[q];
  }
  return summary;
}

inline RunSummary RepeatAndAggregate(const RunConfig& config) {
  const auto histories = RunRepetitions(config);
  return Summarize(histories);
}

}  // namespace ppate

#endif  // PPATE_VOTING_ENGINE_HPP_
