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

// Turns per-group privacy budgets into the parameters of each personalized
// variant: duplicate counts for upsampling, participation frequencies and
// schedules for vanishing, normalized teacher weights for weighting.

#ifndef PPATE_PLANNER_HPP_
#define PPATE_PLANNER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppate/aggregators.hpp"
#include "ppate/error.hpp"
#include "ppate/random.hpp"
#include "ppate/rdp_accountant.hpp"

namespace ppate {

// A budget shared by `count` sensitive data points.
struct BudgetCount {
  double epsilon;
  long count;
};

// Budget assigned to the non-personalized baseline.
enum class BaselineBudget { kMin, kAverage, kMax };

struct PlannerOptions {
  double precision = 1e-6;
  int duplicate_cap = 64;
  double vanishing_exponent = 4.0;
  // sigma1 and sigma2 of vanishing runs are multiplied by
  // active_fraction^vanishing_noise_power; the threshold by active_fraction.
  double vanishing_noise_power = 0.5;
  int reshuffle_period = 50;
  BaselineBudget baseline = BaselineBudget::kMin;

  bool operator==(const PlannerOptions&) const = default;
};

struct GroupSpec {
  int group_id;
  PrivacyBudget budget;
  long num_points;
  // Duplicates u (upsampling), frequency s (vanishing), weight w (weighting);
  // 1 for the non-personalized kinds.
  double param;
  // Individual sensitivity when the group's data takes part in a vote.
  Sensitivity sensitivity;

  bool operator==(const GroupSpec&) const = default;
};

// Teachers of an upsampling ensemble hold data of every group.
inline constexpr int kMixedGroup = -1;

struct PlanResult {
  AggregatorKind kind = AggregatorKind::kConfident;
  std::vector<GroupSpec> groups;
  std::vector<TeacherAssignment> teachers;
  VotingConfig config;
  double upsampling_gain = 1.0;

  bool operator==(const PlanResult&) const = default;
};

namespace internal {

inline void CheckBudgets(std::span<const BudgetCount> budgets) {
  Require(!budgets.empty(), ErrorCategory::kEmptyInput, "no budgets given");
  for (const auto& b : budgets) {
    Require(std::isfinite(b.epsilon) && b.epsilon > 0.0,
            ErrorCategory::kInvalidParameter, "budgets must be > 0");
    Require(b.count > 0, ErrorCategory::kInvalidParameter,
            "every budget group needs at least one point");
  }
}

inline long TotalPoints(std::span<const BudgetCount> budgets) {
  long total = 0;
  for (const auto& b : budgets) total += b.count;
  return total;
}

}  // namespace internal

// Largest-remainder split of k teachers proportional to each group's points,
// with at least one teacher per group.
inline std::vector<int> AllocateTeachers(std::span<const BudgetCount> budgets, int k) {
  internal::CheckBudgets(budgets);
  const int groups = static_cast<int>(budgets.size());
  Require(k >= groups, ErrorCategory::kPlanInfeasible,
          "need at least one teacher per budget group (k=" + std::to_string(k) +
              ", groups=" + std::to_string(groups) + ")");
  const double total = static_cast<double>(internal::TotalPoints(budgets));
  std::vector<int> teachers(budgets.size(), 1);
  int remaining = k - groups;
  std::vector<std::pair<double, int>> remainders;
  for (int g = 0; g < groups; ++g) {
    const double ideal = k * (budgets[g].count / total);
    const int extra = std::max(0, static_cast<int>(std::floor(ideal)) - 1);
    const int take = std::min(extra, remaining);
    teachers[g] += take;
    remaining -= take;
    remainders.emplace_back(-(ideal - teachers[g]), g);
  }
  std::stable_sort(remainders.begin(), remainders.end());
  for (std::size_t i = 0; remaining > 0; i = (i + 1) % remainders.size()) {
    ++teachers[remainders[i].second];
    --remaining;
  }
  return teachers;
}

// Duplicate counts u_g proportional to the budgets: the smallest integer
// multiplier m for which every m * eps_g / eps_min is within `precision`
// (relative) of an integer.
inline std::vector<int> UpsamplingDuplicates(std::span<const BudgetCount> budgets,
                                             double precision, int duplicate_cap) {
  internal::CheckBudgets(budgets);
  Require(precision > 0.0 && precision < 0.5, ErrorCategory::kInvalidParameter,
          "precision must lie in (0, 0.5)");
  Require(duplicate_cap >= 1, ErrorCategory::kInvalidParameter,
          "duplicate cap must be >= 1");
  double eps_min = budgets[0].epsilon;
  for (const auto& b : budgets) eps_min = std::min(eps_min, b.epsilon);
  for (int m = 1; m <= duplicate_cap; ++m) {
    std::vector<int> dup;
    bool ok = true;
    for (const auto& b : budgets) {
      const double scaled = m * (b.epsilon / eps_min);
      const double rounded = std::round(scaled);
      if (rounded > duplicate_cap ||
          std::abs(scaled - rounded) > precision * scaled) {
        ok = false;
        break;
      }
      dup.push_back(static_cast<int>(rounded));
    }
    if (ok) return dup;
  }
  Fail(ErrorCategory::kPlanInfeasible,
       "budgets are not commensurate within precision " + std::to_string(precision) +
           " below the duplicate cap of " + std::to_string(duplicate_cap) +
           "; loosen the precision or raise the duplicate cap");
}

// Participation frequency (eps / eps_max)^exponent per budget.
inline std::vector<double> PlanVanishing(std::span<const double> budgets,
                                         double exponent = 4.0) {
  Require(!budgets.empty(), ErrorCategory::kEmptyInput, "no budgets given");
  Require(std::isfinite(exponent) && exponent > 0.0,
          ErrorCategory::kInvalidParameter, "exponent must be > 0");
  double eps_max = 0.0;
  for (double e : budgets) {
    Require(std::isfinite(e) && e > 0.0, ErrorCategory::kInvalidParameter,
            "budgets must be > 0");
    eps_max = std::max(eps_max, e);
  }
  std::vector<double> freq;
  for (double e : budgets) freq.push_back(e == eps_max ? 1.0 : std::pow(e / eps_max, exponent));
  return freq;
}

// Teacher weight eps_g / mean teacher budget, so weights over all teachers
// average to one. `teacher_counts[g]` teachers carry budget `budgets[g]`.
inline std::vector<double> PlanWeighting(std::span<const double> budgets,
                                         std::span<const int> teacher_counts) {
  Require(!budgets.empty(), ErrorCategory::kEmptyInput, "no budgets given");
  Require(budgets.size() == teacher_counts.size(), ErrorCategory::kDimensionMismatch,
          "one teacher count per budget is required");
  double weighted = 0.0;
  long teachers = 0;
  for (std::size_t g = 0; g < budgets.size(); ++g) {
    Require(std::isfinite(budgets[g]) && budgets[g] > 0.0,
            ErrorCategory::kInvalidParameter, "budgets must be > 0");
    Require(teacher_counts[g] > 0, ErrorCategory::kInvalidParameter,
            "every budget needs at least one teacher");
    weighted += budgets[g] * teacher_counts[g];
    teachers += teacher_counts[g];
  }
  const auto [lo, hi] = std::minmax_element(budgets.begin(), budgets.end());
  if (*lo == *hi) return std::vector<double>(budgets.size(), 1.0);
  const double mean = weighted / static_cast<double>(teachers);
  std::vector<double> weights;
  for (double e : budgets) weights.push_back(e / mean);
  return weights;
}

// Upsampling plan. The ensemble and k, sigma1, sigma2, T grow by the relative
// data gain s = N'/N.
inline PlanResult PlanUpsampling(std::span<const BudgetCount> budgets,
                                 const VotingConfig& base,
                                 const PlannerOptions& options = {}) {
  base.Validate();
  const auto dup = UpsamplingDuplicates(budgets, options.precision, options.duplicate_cap);
  long enlarged = 0;
  for (std::size_t g = 0; g < budgets.size(); ++g) enlarged += dup[g] * budgets[g].count;
  const double gain =
      static_cast<double>(enlarged) / static_cast<double>(internal::TotalPoints(budgets));

  PlanResult plan;
  plan.kind = AggregatorKind::kUpsampling;
  plan.upsampling_gain = gain;
  plan.config = base;
  plan.config.k = static_cast<int>(std::lround(base.k * gain));
  plan.config.sigma1 = base.sigma1 * gain;
  plan.config.sigma2 = base.sigma2 * gain;
  plan.config.threshold = base.threshold * gain;
  for (std::size_t g = 0; g < budgets.size(); ++g) {
    plan.groups.push_back({static_cast<int>(g), PrivacyBudget(budgets[g].epsilon, base.delta),
                           budgets[g].count, static_cast<double>(dup[g]),
                           Sensitivity(dup[g])});
  }
  for (int t = 0; t < plan.config.k; ++t) plan.teachers.push_back({t, kMixedGroup, 1.0, 1.0});
  return plan;
}

namespace internal {

inline std::vector<TeacherAssignment> GroupedTeachers(std::span<const int> per_group,
                                                      std::span<const double> weights,
                                                      std::span<const double> freq) {
  std::vector<TeacherAssignment> teachers;
  int id = 0;
  for (std::size_t g = 0; g < per_group.size(); ++g) {
    for (int i = 0; i < per_group[g]; ++i) {
      teachers.push_back({id++, static_cast<int>(g), weights.empty() ? 1.0 : weights[g],
                          freq.empty() ? 1.0 : freq[g]});
    }
  }
  return teachers;
}

inline std::vector<double> Epsilons(std::span<const BudgetCount> budgets) {
  std::vector<double> eps;
  for (const auto& b : budgets) eps.push_back(b.epsilon);
  return eps;
}

}  // namespace internal

// Vanishing plan: teachers hold single-budget data; lower budgets vote less
// often. Noise and threshold shrink with the mean active fraction.
inline PlanResult PlanVanishingRun(std::span<const BudgetCount> budgets,
                                   const VotingConfig& base,
                                   const PlannerOptions& options = {}) {
  base.Validate();
  const auto per_group = AllocateTeachers(budgets, base.k);
  const auto eps = internal::Epsilons(budgets);
  const auto freq = PlanVanishing(eps, options.vanishing_exponent);

  PlanResult plan;
  plan.kind = AggregatorKind::kVanishing;
  plan.config = base;
  plan.teachers = internal::GroupedTeachers(per_group, {}, freq);
  double active = 0.0;
  for (const auto& t : plan.teachers) active += t.participation;
  const double fraction = active / base.k;
  const double noise_scale = std::pow(fraction, options.vanishing_noise_power);
  plan.config.sigma1 = base.sigma1 * noise_scale;
  plan.config.sigma2 = base.sigma2 * noise_scale;
  plan.config.threshold = base.threshold * fraction;
  for (std::size_t g = 0; g < budgets.size(); ++g) {
    plan.groups.push_back({static_cast<int>(g), PrivacyBudget(eps[g], base.delta),
                           budgets[g].count, freq[g], Sensitivity(1.0)});
  }
  return plan;
}

// Weighting plan: hyperparameters unchanged; weights average to one.
inline PlanResult PlanWeightingRun(std::span<const BudgetCount> budgets,
                                   const VotingConfig& base,
                                   const PlannerOptions& options = {}) {
  (void)options;
  base.Validate();
  const auto per_group = AllocateTeachers(budgets, base.k);
  const auto eps = internal::Epsilons(budgets);
  const auto weights = PlanWeighting(eps, per_group);

  PlanResult plan;
  plan.kind = AggregatorKind::kWeighting;
  plan.config = base;
  plan.teachers = internal::GroupedTeachers(per_group, weights, {});
  for (std::size_t g = 0; g < budgets.size(); ++g) {
    plan.groups.push_back({static_cast<int>(g), PrivacyBudget(eps[g], base.delta),
                           budgets[g].count, weights[g], Sensitivity(weights[g])});
  }
  return plan;
}

// Non-personalized plan: one group holding every point at the baseline
// budget, all sensitivities one.
inline PlanResult PlanBaseline(AggregatorKind kind, std::span<const BudgetCount> budgets,
                               const VotingConfig& base,
                               const PlannerOptions& options = {}) {
  base.Validate();
  internal::CheckBudgets(budgets);
  double eps = budgets[0].epsilon;
  double weighted = 0.0;
  for (const auto& b : budgets) {
    if (options.baseline == BaselineBudget::kMin) eps = std::min(eps, b.epsilon);
    if (options.baseline == BaselineBudget::kMax) eps = std::max(eps, b.epsilon);
    weighted += b.epsilon * static_cast<double>(b.count);
  }
  const long total = internal::TotalPoints(budgets);
  if (options.baseline == BaselineBudget::kAverage) eps = weighted / static_cast<double>(total);

  PlanResult plan;
  plan.kind = kind;
  plan.config = base;
  plan.groups.push_back({0, PrivacyBudget(eps, base.delta), total, 1.0, Sensitivity(1.0)});
  for (int t = 0; t < base.k; ++t) plan.teachers.push_back({t, 0, 1.0, 1.0});
  return plan;
}

inline PlanResult MakePlan(AggregatorKind kind, std::span<const BudgetCount> budgets,
                           const VotingConfig& base, const PlannerOptions& options = {}) {
  switch (kind) {
    case AggregatorKind::kUpsampling:
      return PlanUpsampling(budgets, base, options);
    case AggregatorKind::kVanishing:
      return PlanVanishingRun(budgets, base, options);
    case AggregatorKind::kWeighting:
      return PlanWeightingRun(budgets, base, options);
    default:
      return PlanBaseline(kind, budgets, base, options);
  }
}

// Converts {epsilon, ratio} shares of `total_points` into point counts; the
// rounding remainder goes to the last share.
inline std::vector<BudgetCount> SharesToCounts(std::span<const std::pair<double, double>> shares,
                                               long total_points) {
  Require(!shares.empty(), ErrorCategory::kEmptyInput, "no budget shares given");
  Require(total_points >= static_cast<long>(shares.size()),
          ErrorCategory::kInvalidParameter, "too few points for the budget shares");
  std::vector<BudgetCount> out;
  long assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    long count = i + 1 == shares.size()
                     ? total_points - assigned
                     : std::lround(shares[i].second * static_cast<double>(total_points));
    out.push_back({shares[i].first, count});
    assigned += count;
  }
  return out;
}

// Which teachers vote on each query of a vanishing run.
class VanishingSchedule {
 public:
  VanishingSchedule(int num_queries, int num_teachers)
      : num_queries_(num_queries),
        num_teachers_(num_teachers),
        active_(static_cast<std::size_t>(num_queries) * num_teachers, 0) {}

  int num_queries() const { return num_queries_; }
  int num_teachers() const { return num_teachers_; }

  std::span<const std::uint8_t> Row(int query) const {
    return {active_.data() + static_cast<std::size_t>(query) * num_teachers_,
            static_cast<std::size_t>(num_teachers_)};
  }

  bool Active(int query, int teacher) const {
    return active_[static_cast<std::size_t>(query) * num_teachers_ + teacher] != 0;
  }

  void Set(int query, int teacher, bool on) {
    active_[static_cast<std::size_t>(query) * num_teachers_ + teacher] = on ? 1 : 0;
  }

 private:
  int num_queries_;
  int num_teachers_;
  std::vector<std::uint8_t> active_;
};

// Periodic participation: a teacher of frequency f has period L = round(1/f)
// and is active in round(f * L) consecutive queries of every aligned window of
// length L. Teachers sharing a period get shifted phases so the number of
// active teachers stays stable. Phases are reassigned by a random permutation
// at every epoch, an epoch being the smallest multiple of L that is at least
// `reshuffle_period` queries long.
inline VanishingSchedule ScheduleVanishing(std::span<const double> frequencies,
                                           int num_queries, int reshuffle_period,
                                           std::uint64_t seed) {
  Require(num_queries >= 0, ErrorCategory::kInvalidParameter,
          "num_queries must be >= 0");
  Require(reshuffle_period >= 1, ErrorCategory::kInvalidParameter,
          "reshuffle period must be >= 1");
  const int k = static_cast<int>(frequencies.size());
  std::map<std::pair<int, int>, std::vector<int>> classes;
  for (int t = 0; t < k; ++t) {
    const double f = frequencies[t];
    Require(std::isfinite(f) && f > 0.0 && f <= 1.0, ErrorCategory::kInvalidParameter,
            "participation frequencies must lie in (0, 1]");
    const int period = std::max(1, static_cast<int>(std::lround(1.0 / f)));
    const int on = std::clamp(static_cast<int>(std::lround(f * period)), 1, period);
    classes[{period, on}].push_back(t);
  }

  VanishingSchedule schedule(num_queries, k);
  std::uint64_t class_index = 0;
  for (const auto& [key, members] : classes) {
    const auto [period, on] = key;
    const int epoch = ((reshuffle_period + period - 1) / period) * period;
    std::vector<int> order = members;
    for (int start = 0; start < num_queries; start += epoch) {
      order = members;
      Xoshiro256 rng(seed, class_index * 1000003ULL + static_cast<std::uint64_t>(start / epoch),
                     StreamPurpose::kSchedule);
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[UniformIndex(rng, i)]);
      }
      const int end = std::min(num_queries, start + epoch);
      for (std::size_t p = 0; p < order.size(); ++p) {
        const int phase = static_cast<int>(p % static_cast<std::size_t>(period));
        for (int q = start; q < end; ++q) {
          if (((q - start) + period - phase) % period < on) schedule.Set(q, order[p], true);
        }
      }
    }
    ++class_index;
  }
  return schedule;
}

}  // namespace ppate

#endif  // PPATE_PLANNER_HPP_
