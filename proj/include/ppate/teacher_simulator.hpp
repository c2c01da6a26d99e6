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

// Synthetic teacher ensembles and the vote-matrix file format.
//
// Teacher i answers query q correctly with probability Phi(theta_i - b_q),
// where b_q ~ N(0, spread^2) is a per-query difficulty shared by all teachers
// and theta_i = Phi^-1(accuracy_i) * sqrt(1 + spread^2). The marginal accuracy
// of teacher i is exactly accuracy_i; spread = 0 gives independent teachers.
// Wrong answers are uniform over the other classes unless a confusion matrix
// is supplied.

#ifndef PPATE_TEACHER_SIMULATOR_HPP_
#define PPATE_TEACHER_SIMULATOR_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ppate/aggregators.hpp"
#include "ppate/error.hpp"
#include "ppate/random.hpp"

namespace ppate {

class VoteMatrix {
 public:
  VoteMatrix() = default;

  VoteMatrix(int num_classes, int num_teachers, int num_queries)
      : num_classes_(num_classes),
        num_teachers_(num_teachers),
        num_queries_(num_queries),
        entries_(static_cast<std::size_t>(num_teachers) * num_queries, kAbstain),
        ground_truth_(static_cast<std::size_t>(num_queries), kAbstain) {
    Require(num_classes >= 1 && num_teachers >= 1 && num_queries >= 0,
            ErrorCategory::kInvalidParameter, "invalid vote matrix dimensions");
  }

  int num_classes() const { return num_classes_; }
  int num_teachers() const { return num_teachers_; }
  int num_queries() const { return num_queries_; }

  std::span<const int> Row(int query) const {
    return {entries_.data() + static_cast<std::size_t>(query) * num_teachers_,
            static_cast<std::size_t>(num_teachers_)};
  }
  std::span<int> MutableRow(int query) {
    return {entries_.data() + static_cast<std::size_t>(query) * num_teachers_,
            static_cast<std::size_t>(num_teachers_)};
  }

  int at(int query, int teacher) const {
    return entries_[static_cast<std::size_t>(query) * num_teachers_ + teacher];
  }

  // kAbstain when unknown.
  int ground_truth(int query) const { return ground_truth_[query]; }
  void set_ground_truth(int query, int label) { ground_truth_[query] = label; }

  bool operator==(const VoteMatrix&) const = default;

 private:
  int num_classes_ = 0;
  int num_teachers_ = 0;
  int num_queries_ = 0;
  std::vector<int> entries_;
  std::vector<int> ground_truth_;
};

struct SyntheticEnsemble {
  int num_classes = 10;
  std::vector<double> accuracies;
  double difficulty_spread = 0.0;
  // Optional num_classes x num_classes matrix; row c is the distribution of a
  // wrong answer when the truth is c (its diagonal is ignored).
  std::vector<std::vector<double>> confusion;

  static SyntheticEnsemble Uniform(int k, int num_classes, double accuracy,
                                   double difficulty_spread = 0.0) {
    return {num_classes, std::vector<double>(static_cast<std::size_t>(k), accuracy),
            difficulty_spread, {}};
  }

  int size() const { return static_cast<int>(accuracies.size()); }

  void Validate() const {
    Require(num_classes >= 2, ErrorCategory::kInvalidParameter,
            "a synthetic ensemble needs at least two classes");
    Require(!accuracies.empty(), ErrorCategory::kInvalidParameter,
            "a synthetic ensemble needs at least one teacher");
    for (double a : accuracies) {
      Require(a >= 1.0 / num_classes - 1e-12 && a <= 1.0, ErrorCategory::kInvalidParameter,
              "teacher accuracy must lie in [1/num_classes, 1]");
    }
    Require(std::isfinite(difficulty_spread) && difficulty_spread >= 0.0,
            ErrorCategory::kInvalidParameter, "difficulty spread must be >= 0");
    if (!confusion.empty()) {
      Require(confusion.size() == static_cast<std::size_t>(num_classes),
              ErrorCategory::kDimensionMismatch, "confusion matrix must be square");
      for (std::size_t c = 0; c < confusion.size(); ++c) {
        Require(confusion[c].size() == static_cast<std::size_t>(num_classes),
                ErrorCategory::kDimensionMismatch, "confusion matrix must be square");
        double off = 0.0;
        for (std::size_t j = 0; j < confusion[c].size(); ++j) {
          Require(confusion[c][j] >= 0.0, ErrorCategory::kInvalidParameter,
                  "confusion weights must be >= 0");
          if (j != c) off += confusion[c][j];
        }
        Require(off > 0.0, ErrorCategory::kInvalidParameter,
                "every confusion row needs off-diagonal mass");
      }
    }
  }
};

namespace internal {

inline double NormalCdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }

// Inverse of NormalCdf by bisection; +-inf at the endpoints.
inline double NormalQuantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (NormalCdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline int WrongClass(const SyntheticEnsemble& ensemble, int truth, double u) {
  const int m = ensemble.num_classes;
  if (ensemble.confusion.empty()) {
    int j = std::min(m - 2, static_cast<int>(u * (m - 1)));
    return j >= truth ? j + 1 : j;
  }
  const auto& row = ensemble.confusion[truth];
  double off = 0.0;
  for (int j = 0; j < m; ++j) {
    if (j != truth) off += row[j];
  }
  double target = u * off;
  int last = truth == 0 ? 1 : 0;
  for (int j = 0; j < m; ++j) {
    if (j == truth || row[j] <= 0.0) continue;
    last = j;
    if (target < row[j]) return j;
    target -= row[j];
  }
  return last;
}

}  // namespace internal

// Fills `out` with the votes of query `query`. Every teacher consumes exactly
// two uniforms, so two ensembles differing only in accuracies see the same
// random numbers.
inline void SampleQueryVotes(const SyntheticEnsemble& ensemble, int truth,
                             std::uint64_t seed, int query, std::span<int> out) {
  Xoshiro256 rng(seed, static_cast<std::uint64_t>(query), StreamPurpose::kVotes);
  const double spread = ensemble.difficulty_spread;
  const double difficulty = spread > 0.0 ? spread * StandardNormal(rng) : 0.0;
  const double scale = std::sqrt(1.0 + spread * spread);
  double cached_accuracy = std::numeric_limits<double>::quiet_NaN();
  double cached_p = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double u_correct = Uniform01(rng);
    const double u_wrong = Uniform01(rng);
    const double accuracy = ensemble.accuracies[i];
    if (accuracy != cached_accuracy) {
      cached_accuracy = accuracy;
      cached_p = spread > 0.0
                     ? internal::NormalCdf(internal::NormalQuantile(accuracy) * scale - difficulty)
                     : accuracy;
    }
    out[i] = u_correct < cached_p ? truth : internal::WrongClass(ensemble, truth, u_wrong);
  }
}

inline std::vector<int> SampleGroundTruth(int num_queries, int num_classes,
                                          std::uint64_t seed) {
  std::vector<int> truth;
  truth.reserve(static_cast<std::size_t>(num_queries));
  for (int q = 0; q < num_queries; ++q) {
    Xoshiro256 rng(seed, static_cast<std::uint64_t>(q), StreamPurpose::kGroundTruth);
    truth.push_back(static_cast<int>(UniformIndex(rng, static_cast<std::uint64_t>(num_classes))));
  }
  return truth;
}

// Votes of `ensemble` on queries with the given true classes. Query q draws
// from its own stream derived from (seed, q).
inline VoteMatrix SampleVotes(const SyntheticEnsemble& ensemble,
                              std::span<const int> ground_truth, std::uint64_t seed) {
  ensemble.Validate();
  VoteMatrix matrix(ensemble.num_classes, ensemble.size(),
                    static_cast<int>(ground_truth.size()));
  for (int q = 0; q < matrix.num_queries(); ++q) {
    const int truth = ground_truth[q];
    Require(truth >= 0 && truth < ensemble.num_classes, ErrorCategory::kInvalidVote,
            "ground truth class out of range at query " + std::to_string(q));
    SampleQueryVotes(ensemble, truth, seed, q, matrix.MutableRow(q));
    matrix.set_ground_truth(q, truth);
  }
  return matrix;
}

// Fraction of queries with known truth whose plain plurality (smallest index
// on ties, abstentions ignored) is the true class.
inline double PluralityAccuracy(const VoteMatrix& matrix) {
  std::vector<int> counts(static_cast<std::size_t>(matrix.num_classes()));
  long known = 0;
  long correct = 0;
  for (int q = 0; q < matrix.num_queries(); ++q) {
    if (matrix.ground_truth(q) == kAbstain) continue;
    std::fill(counts.begin(), counts.end(), 0);
    for (int v : matrix.Row(q)) {
      if (v != kAbstain) ++counts[v];
    }
    const int top = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    ++known;
    if (top == matrix.ground_truth(q)) ++correct;
  }
  return known == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(known);
}

struct Calibration {
  double accuracy;
  double plurality_accuracy;
};

// Finds the common per-teacher accuracy whose simulated plurality accuracy
// reaches `target` by bisection on [1/num_classes, 1]. The same random numbers
// are reused at every step, which makes the objective monotone.
inline Calibration CalibrateAccuracy(int k, int num_classes, double difficulty_spread,
                                     double target, int num_queries, std::uint64_t seed) {
  Require(target > 0.0 && target <= 1.0, ErrorCategory::kInvalidParameter,
          "target plurality accuracy must lie in (0, 1]");
  Require(num_queries >= 1, ErrorCategory::kInvalidParameter,
          "calibration needs at least one query");
  const auto truth = SampleGroundTruth(num_queries, num_classes, seed);
  auto measure = [&](double accuracy) {
    auto ensemble = SyntheticEnsemble::Uniform(k, num_classes, accuracy, difficulty_spread);
    return PluralityAccuracy(SampleVotes(ensemble, truth, seed));
  };
  double lo = 1.0 / num_classes;
  double hi = 1.0;
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    (measure(mid) < target ? lo : hi) = mid;
  }
  return {hi, measure(hi)};
}

// ---------------------------------------------------------------------------
// Vote-matrix file: a header line "classes=<m>,teachers=<k>", then one line
// per query holding k comma-separated class indices ("-" for an abstaining
// teacher) and an optional trailing "gt=<class>" field.

inline void WriteVotes(std::ostream& out, const VoteMatrix& matrix) {
  out << "classes=" << matrix.num_classes() << ",teachers=" << matrix.num_teachers() << '\n';
  std::string line;
  for (int q = 0; q < matrix.num_queries(); ++q) {
    line.clear();
    const auto row = matrix.Row(q);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += ',';
      if (row[i] == kAbstain) {
        line += '-';
      } else {
        line += std::to_string(row[i]);
      }
    }
    if (matrix.ground_truth(q) != kAbstain) {
      line += ",gt=";
      line += std::to_string(matrix.ground_truth(q));
    }
    line += '\n';
    out << line;
  }
}

namespace internal {

[[noreturn]] inline void VoteParseError(long line, const std::string& what) {
  Fail(ErrorCategory::kParseError, "vote matrix line " + std::to_string(line) + ": " + what);
}

inline int ParseInt(std::string_view field, long line, const char* what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    VoteParseError(line, std::string("bad ") + what + " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace internal

inline VoteMatrix LoadVotes(std::istream& in) {
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line)) internal::VoteParseError(line_no, "missing header");
  int classes = 0;
  int teachers = 0;
  {
    const std::string_view header(line);
    const auto comma = header.find(',');
    if (!header.starts_with("classes=") || comma == std::string_view::npos ||
        header.substr(comma + 1, 9) != "teachers=") {
      internal::VoteParseError(line_no, "expected 'classes=<m>,teachers=<k>'");
    }
    classes = internal::ParseInt(header.substr(8, comma - 8), line_no, "class count");
    teachers = internal::ParseInt(header.substr(comma + 10), line_no, "teacher count");
    if (classes < 1 || teachers < 1) internal::VoteParseError(line_no, "dimensions must be >= 1");
  }

  std::vector<int> entries;
  std::vector<int> truth;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    int column = 0;
    int gt = kAbstain;
    while (true) {
      const auto comma = rest.find(',');
      const auto field = rest.substr(0, comma);
      if (field.starts_with("gt=")) {
        if (comma != std::string_view::npos) internal::VoteParseError(line_no, "gt= must be the last field");
        gt = internal::ParseInt(field.substr(3), line_no, "ground truth");
        if (gt < 0 || gt >= classes) internal::VoteParseError(line_no, "ground truth class out of range");
      } else {
        if (column >= teachers) internal::VoteParseError(line_no, "more votes than teachers");
        int vote = kAbstain;
        if (field != "-") {
          vote = internal::ParseInt(field, line_no, "class index");
          if (vote < 0 || vote >= classes) {
            internal::VoteParseError(line_no, "class index " + std::to_string(vote) +
                                                  " outside [0, " + std::to_string(classes) + ")");
          }
        }
        entries.push_back(vote);
        ++column;
      }
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (column != teachers) {
      internal::VoteParseError(line_no, "expected " + std::to_string(teachers) + " votes, got " +
                                            std::to_string(column));
    }
    truth.push_back(gt);
  }

  VoteMatrix matrix(classes, teachers, static_cast<int>(truth.size()));
  for (int q = 0; q < matrix.num_queries(); ++q) {
    auto row = matrix.MutableRow(q);
    std::copy_n(entries.begin() + static_cast<std::ptrdiff_t>(q) * teachers, teachers, row.begin());
    matrix.set_ground_truth(q, truth[q]);
  }
  return matrix;
}

inline VoteMatrix LoadVotesFile(const std::string& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorCategory::kIoError, "cannot open vote matrix '" + path + "'");
  return LoadVotes(in);
}

}  // namespace ppate

#endif  // PPATE_TEACHER_SIMULATOR_HPP_
