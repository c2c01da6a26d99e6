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

#ifndef PPATE_AGGREGATORS_HPP_
#define PPATE_AGGREGATORS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppate/error.hpp"
#include "ppate/random.hpp"

namespace ppate {

// Marker for a teacher that casts no vote on a query.
inline constexpr int kAbstain = -1;

enum class AggregatorKind {
  kPlain,       // GNMax, every query answered
  kConfident,   // Confident-GNMax, non-personalized
  kUpsampling,  // uGNMax
  kVanishing,   // vGNMax
  kWeighting,   // wGNMax
};

inline std::string_view KindName(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::kPlain:
      return "plain";
    case AggregatorKind::kConfident:
      return "confident";
    case AggregatorKind::kUpsampling:
      return "upsampling";
    case AggregatorKind::kVanishing:
      return "vanishing";
    case AggregatorKind::kWeighting:
      return "weighting";
  }
  return "unknown";
}

inline AggregatorKind ParseKind(std::string_view name) {
  for (auto kind : {AggregatorKind::kPlain, AggregatorKind::kConfident,
                    AggregatorKind::kUpsampling, AggregatorKind::kVanishing,
                    AggregatorKind::kWeighting}) {
    if (KindName(kind) == name) return kind;
  }
  Fail(ErrorCategory::kParseError, "unknown variant '" + std::string(name) + "'");
}

// Every kind except plain GNMax runs the consensus check first.
inline bool UsesGate(AggregatorKind kind) { return kind != AggregatorKind::kPlain; }

// Per-class vote counts of one query; real-valued to admit weighted votes.
class VoteVector {
 public:
  explicit VoteVector(std::vector<double> counts) : counts_(std::move(counts)) {
    Require(!counts_.empty(), ErrorCategory::kInvalidVote,
            "vote vector needs at least one class");
    for (double c : counts_) {
      Require(std::isfinite(c) && c >= 0.0, ErrorCategory::kInvalidVote,
              "vote counts must be finite and >= 0");
    }
  }

  std::span<const double> counts() const { return counts_; }
  std::size_t num_classes() const { return counts_.size(); }
  double operator[](std::size_t j) const { return counts_[j]; }

  double max_count() const { return *std::max_element(counts_.begin(), counts_.end()); }

  // Plurality class; smallest index on ties.
  std::size_t plurality() const {
    return static_cast<std::size_t>(
        std::max_element(counts_.begin(), counts_.end()) - counts_.begin());
  }

  double total() const {
    double sum = 0.0;
    for (double c : counts_) sum += c;
    return sum;
  }

  bool operator==(const VoteVector&) const = default;

 private:
  std::vector<double> counts_;
};

struct TeacherAssignment {
  int teacher_id = 0;
  int group_id = 0;
  double weight = 1.0;         // wGNMax
  double participation = 1.0;  // vGNMax frequency

  bool operator==(const TeacherAssignment&) const = default;
};

struct VotingConfig {
  int k = 250;
  double sigma1 = 150.0;
  double sigma2 = 40.0;
  double threshold = 200.0;
  double delta = 1e-5;
  int num_classes = 10;
  int label_cap = 2000;

  void Validate() const {
    Require(k >= 1, ErrorCategory::kInvalidParameter, "k must be >= 1");
    Require(std::isfinite(sigma1) && sigma1 > 0.0 && std::isfinite(sigma2) &&
                sigma2 > 0.0,
            ErrorCategory::kInvalidParameter, "sigma1 and sigma2 must be > 0");
    Require(std::isfinite(threshold) && threshold > 0.0,
            ErrorCategory::kInvalidParameter, "threshold must be > 0");
    Require(delta > 0.0 && delta <= 1.0, ErrorCategory::kInvalidParameter,
            "delta must lie in (0, 1]");
    Require(num_classes >= 1, ErrorCategory::kInvalidParameter,
            "num_classes must be >= 1");
    Require(label_cap >= 0, ErrorCategory::kInvalidParameter,
            "label_cap must be >= 0");
  }

  bool operator==(const VotingConfig&) const = default;
};

// Table 2 parameters for the MNIST experiments.
inline VotingConfig MnistConfig() { return {250, 150.0, 40.0, 200.0, 1e-5, 10, 2000}; }

// Table 2 parameters for the Adult income experiments.
inline VotingConfig AdultConfig() { return {250, 200.0, 40.0, 300.0, 1e-5, 2, 2000}; }

// Builds the variant's vote count. raw_votes[i] is teacher i's class or
// kAbstain; `active` flags which teachers take part in this query and may be
// empty (everyone participates). Only vanishing looks at the flags and only
// weighting looks at the weights.
inline VoteVector BuildVoteVector(std::span<const int> raw_votes,
                                  std::span<const TeacherAssignment> assignments,
                                  AggregatorKind kind,
                                  std::span<const std::uint8_t> active,
                                  int num_classes) {
  Require(num_classes >= 1, ErrorCategory::kInvalidParameter,
          "num_classes must be >= 1");
  Require(raw_votes.size() == assignments.size(),
          ErrorCategory::kDimensionMismatch,
          "one assignment per teacher vote is required");
  Require(active.empty() || active.size() == raw_votes.size(),
          ErrorCategory::kDimensionMismatch,
          "participation flags must cover every teacher");
  std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
  for (std::size_t i = 0; i < raw_votes.size(); ++i) {
    const int vote = raw_votes[i];
    if (vote == kAbstain) continue;
    Require(vote >= 0 && vote < num_classes, ErrorCategory::kInvalidVote,
            "teacher " + std::to_string(i) + " voted for class " +
                std::to_string(vote) + " outside [0, " +
                std::to_string(num_classes) + ")");
    switch (kind) {
      case AggregatorKind::kVanishing:
        if (active.empty() || active[i]) counts[vote] += 1.0;
        break;
      case AggregatorKind::kWeighting:
        counts[vote] += assignments[i].weight;
        break;
      default:
        counts[vote] += 1.0;
        break;
    }
  }
  return VoteVector(std::move(counts));
}

// Gaussian NoisyMax: argmax_j (n_j + N(0, sigma^2)), one independent draw per
// class, smallest index on ties.
template <typename Rng>
int GnMax(const VoteVector& votes, double sigma, Rng& rng) {
  Require(std::isfinite(sigma) && sigma > 0.0, ErrorCategory::kInvalidParameter,
          "sigma2 must be > 0");
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < votes.num_classes(); ++j) {
    const double noisy = votes[j] + sigma * StandardNormal(rng);
    if (noisy > best_value) {
      best_value = noisy;
      best = static_cast<int>(j);
    }
  }
  return best;
}

// Consensus check: passes iff max_j n_j + N(0, sigma1^2) >= threshold.
template <typename Rng>
bool ConfidentGate(const VoteVector& votes, double sigma1, double threshold,
                   Rng& rng) {
  Require(std::isfinite(sigma1) && sigma1 > 0.0, ErrorCategory::kInvalidParameter,
          "sigma1 must be > 0");
  return votes.max_count() + sigma1 * StandardNormal(rng) >= threshold;
}

}  // namespace ppate

#endif  // PPATE_AGGREGATORS_HPP_
