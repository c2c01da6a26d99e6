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

// Experiment configuration and every file the command-line tool reads or
// writes: the JSON experiment config, the JSON plan (group-spec) file, the
// versioned cost-history CSV, the long-format report CSV and run summaries.

#ifndef PPATE_EXPERIMENT_IO_HPP_
#define PPATE_EXPERIMENT_IO_HPP_

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ppate/aggregators.hpp"
#include "ppate/error.hpp"
#include "ppate/planner.hpp"
#include "ppate/rdp_accountant.hpp"
#include "ppate/teacher_simulator.hpp"
#include "ppate/voting_engine.hpp"

namespace ppate {

inline constexpr std::string_view kHistoryHeader = "#ppate-cost-history,version=1";
inline constexpr std::string_view kHistoryColumns =
    "query_index,answered,label,group_id,budget,epsilon,best_alpha,labels_so_far";
inline constexpr std::string_view kReportColumns =
    "run,query_index,group_id,epsilon_spent,labels_so_far,answered";
inline constexpr std::string_view kSummaryHeader = "#ppate-run-summary,version=1";

// Shortest representation that parses back to the same double.
inline std::string FormatDouble(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return {buf, ptr};
}

struct BudgetShare {
  double epsilon;
  double ratio;

  bool operator==(const BudgetShare&) const = default;
};

struct ExperimentConfig {
  AggregatorKind variant = AggregatorKind::kConfident;
  VotingConfig voting = MnistConfig();
  std::vector<BudgetShare> budgets = {{std::log(2.0), 1.0}};
  long num_points = 60000;

  // Synthetic teachers. Without an explicit accuracy the accuracy is
  // calibrated to `plurality_accuracy`.
  std::optional<double> accuracy;
  double plurality_accuracy = 0.977;
  double difficulty_spread = 2.0;
  int num_queries = 9000;
  int calibration_queries = 4000;
  // Replayed votes instead of a synthetic ensemble.
  std::optional<std::string> votes_path;

  std::uint64_t ensemble_seed = 1;
  std::uint64_t voting_seed = 2;
  int ensembles = 10;
  int processes = 5;

  PlannerOptions planner;
  bool free_gate = false;
  bool stop_at_exhaustion = false;
  OrderSelection order_selection = OrderSelection::kReference;

  std::string output_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;

  void Validate() const {
    voting.Validate();
    Require(!budgets.empty(), ErrorCategory::kInvalidParameter, "config needs at least one budget");
    double ratio_sum = 0.0;
    for (const auto& b : budgets) {
      Require(std::isfinite(b.epsilon) && b.epsilon > 0.0, ErrorCategory::kInvalidParameter,
              "budget epsilons must be > 0");
      Require(b.ratio > 0.0 && b.ratio <= 1.0, ErrorCategory::kInvalidParameter,
              "budget ratios must lie in (0, 1]");
      ratio_sum += b.ratio;
    }
    Require(std::abs(ratio_sum - 1.0) <= 1e-9, ErrorCategory::kInvalidParameter,
            "budget ratios must sum to 1");
    Require(num_points >= static_cast<long>(budgets.size()), ErrorCategory::kInvalidParameter,
            "num_points must cover every budget group");
    Require(num_queries >= 0 && calibration_queries >= 1, ErrorCategory::kInvalidParameter,
            "query counts must be positive");
    Require(ensembles >= 1 && processes >= 1, ErrorCategory::kInvalidParameter,
            "repetitions must be >= 1");
    if (accuracy) {
      Require(*accuracy >= 1.0 / voting.num_classes && *accuracy <= 1.0,
              ErrorCategory::kInvalidParameter, "accuracy must lie in [1/classes, 1]");
    }
  }

  std::vector<BudgetCount> BudgetCounts() const {
    std::vector<std::pair<double, double>> shares;
    for (const auto& b : budgets) shares.emplace_back(b.epsilon, b.ratio);
    return SharesToCounts(shares, num_points);
  }
};

namespace internal {

using nlohmann::json;

inline std::string_view BaselineName(BaselineBudget b) {
  switch (b) {
    case BaselineBudget::kMin:
      return "min";
    case BaselineBudget::kAverage:
      return "average";
    case BaselineBudget::kMax:
      return "max";
  }
  return "min";
}

inline BaselineBudget ParseBaseline(std::string_view s) {
  if (s == "min") return BaselineBudget::kMin;
  if (s == "average") return BaselineBudget::kAverage;
  if (s == "max") return BaselineBudget::kMax;
  Fail(ErrorCategory::kParseError, "unknown baseline '" + std::string(s) + "'");
}

inline std::string_view SelectionName(OrderSelection s) {
  return s == OrderSelection::kGrid ? "grid" : "reference";
}

inline OrderSelection ParseSelection(std::string_view s) {
  if (s == "reference") return OrderSelection::kReference;
  if (s == "grid") return OrderSelection::kGrid;
  Fail(ErrorCategory::kParseError, "unknown order selection '" + std::string(s) + "'");
}

inline json VotingToJson(const VotingConfig& v) {
  return {{"teachers", v.k},       {"sigma1", v.sigma1},  {"sigma2", v.sigma2},
          {"threshold", v.threshold}, {"delta", v.delta}, {"classes", v.num_classes},
          {"label_cap", v.label_cap}};
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline VotingConfig VotingFromJson(const json& j, VotingConfig v) {
  Read(j, "teachers", v.k);
  Read(j, "sigma1", v.sigma1);
  Read(j, "sigma2", v.sigma2);
  Read(j, "threshold", v.threshold);
  Read(j, "delta", v.delta);
  Read(j, "classes", v.num_classes);
  Read(j, "label_cap", v.label_cap);
  return v;
}

inline json ParseJson(std::istream& in, const std::string& what) {
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorCategory::kParseError, what + ": " + e.what());
  }
}

}  // namespace internal

inline nlohmann::json ConfigToJson(const ExperimentConfig& c) {
  using internal::json;
  json budgets = json::array();
  for (const auto& b : c.budgets) budgets.push_back({{"epsilon", b.epsilon}, {"ratio", b.ratio}});
  json teachers = {{"plurality_accuracy", c.plurality_accuracy},
                   {"difficulty_spread", c.difficulty_spread},
                   {"num_queries", c.num_queries},
                   {"calibration_queries", c.calibration_queries}};
  if (c.accuracy) teachers["accuracy"] = *c.accuracy;
  if (c.votes_path) teachers["votes_path"] = *c.votes_path;
  return {
      {"variant", std::string(KindName(c.variant))},
      {"voting", internal::VotingToJson(c.voting)},
      {"budgets", budgets},
      {"num_points", c.num_points},
      {"teachers", teachers},
      {"seeds", {{"ensemble", c.ensemble_seed}, {"voting", c.voting_seed}}},
      {"repetitions", {{"ensembles", c.ensembles}, {"processes", c.processes}}},
      {"planner",
       {{"precision", c.planner.precision},
        {"duplicate_cap", c.planner.duplicate_cap},
        {"vanishing_exponent", c.planner.vanishing_exponent},
        {"vanishing_noise_power", c.planner.vanishing_noise_power},
        {"reshuffle_period", c.planner.reshuffle_period},
        {"baseline", std::string(internal::BaselineName(c.planner.baseline))}}},
      {"accounting",
       {{"free_gate", c.free_gate},
        {"stop_at_exhaustion", c.stop_at_exhaustion},
        {"order_selection", std::string(internal::SelectionName(c.order_selection))}}},
      {"output", {{"dir", c.output_dir}}},
  };
}

// Missing keys keep their defaults.
inline ExperimentConfig ConfigFromJson(const nlohmann::json& j) {
  using internal::Read;
  ExperimentConfig c;
  try {
    if (j.contains("variant")) c.variant = ParseKind(j.at("variant").get<std::string>());
    if (j.contains("voting")) c.voting = internal::VotingFromJson(j.at("voting"), c.voting);
    if (j.contains("budgets")) {
      c.budgets.clear();
      for (const auto& b : j.at("budgets")) {
        c.budgets.push_back({b.at("epsilon").get<double>(), b.at("ratio").get<double>()});
      }
    }
    Read(j, "num_points", c.num_points);
    if (j.contains("teachers")) {
      const auto& t = j.at("teachers");
      if (t.contains("accuracy")) c.accuracy = t.at("accuracy").get<double>();
      if (t.contains("votes_path")) c.votes_path = t.at("votes_path").get<std::string>();
      Read(t, "plurality_accuracy", c.plurality_accuracy);
      Read(t, "difficulty_spread", c.difficulty_spread);
      Read(t, "num_queries", c.num_queries);
      Read(t, "calibration_queries", c.calibration_queries);
    }
    if (j.contains("seeds")) {
      Read(j.at("seeds"), "ensemble", c.ensemble_seed);
      Read(j.at("seeds"), "voting", c.voting_seed);
    }
    if (j.contains("repetitions")) {
      Read(j.at("repetitions"), "ensembles", c.ensembles);
      Read(j.at("repetitions"), "processes", c.processes);
    }
    if (j.contains("planner")) {
      const auto& p = j.at("planner");
      Read(p, "precision", c.planner.precision);
      Read(p, "duplicate_cap", c.planner.duplicate_cap);
      Read(p, "vanishing_exponent", c.planner.vanishing_exponent);
      Read(p, "vanishing_noise_power", c.planner.vanishing_noise_power);
      Read(p, "reshuffle_period", c.planner.reshuffle_period);
      if (p.contains("baseline")) c.planner.baseline = internal::ParseBaseline(p.at("baseline").get<std::string>());
    }
    if (j.contains("accounting")) {
      const auto& a = j.at("accounting");
      Read(a, "free_gate", c.free_gate);
      Read(a, "stop_at_exhaustion", c.stop_at_exhaustion);
      if (a.contains("order_selection")) {
        c.order_selection = internal::ParseSelection(a.at("order_selection").get<std::string>());
      }
    }
    if (j.contains("output")) Read(j.at("output"), "dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCategory::kParseError, std::string("config: ") + e.what());
  }
  c.Validate();
  return c;
}

inline std::string SerializeConfig(const ExperimentConfig& c) { return ConfigToJson(c).dump(2) + "\n"; }

inline ExperimentConfig ParseConfig(std::istream& in) {
  return ConfigFromJson(internal::ParseJson(in, "config"));
}

inline ExperimentConfig LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorCategory::kIoError, "cannot open config '" + path + "'");
  return ParseConfig(in);
}

// ---------------------------------------------------------------------------
// Plan file.

inline nlohmann::json PlanToJson(const PlanResult& plan) {
  using internal::json;
  json groups = json::array();
  for (const auto& g : plan.groups) {
    groups.push_back({{"group_id", g.group_id},
                      {"epsilon", g.budget.epsilon()},
                      {"delta", g.budget.delta()},
                      {"num_points", g.num_points},
                      {"param", g.param},
                      {"sensitivity", g.sensitivity.value()}});
  }
  json teachers = json::array();
  for (const auto& t : plan.teachers) {
    teachers.push_back({{"teacher_id", t.teacher_id},
                        {"group_id", t.group_id},
                        {"weight", t.weight},
                        {"participation", t.participation}});
  }
  return {{"format", "ppate-plan"},
          {"version", 1},
          {"variant", std::string(KindName(plan.kind))},
          {"upsampling_gain", plan.upsampling_gain},
          {"config", internal::VotingToJson(plan.config)},
          {"groups", groups},
          {"teachers", teachers}};
}

inline PlanResult PlanFromJson(const nlohmann::json& j) {
  PlanResult plan;
  try {
    Require(j.value("format", "") == "ppate-plan" && j.value("version", 0) == 1,
            ErrorCategory::kParseError, "not a version 1 plan file");
    plan.kind = ParseKind(j.at("variant").get<std::string>());
    plan.upsampling_gain = j.at("upsampling_gain").get<double>();
    plan.config = internal::VotingFromJson(j.at("config"), VotingConfig{});
    for (const auto& g : j.at("groups")) {
      plan.groups.push_back({g.at("group_id").get<int>(),
                             PrivacyBudget(g.at("epsilon").get<double>(), g.at("delta").get<double>()),
                             g.at("num_points").get<long>(), g.at("param").get<double>(),
                             Sensitivity(g.at("sensitivity").get<double>())});
    }
    for (const auto& t : j.at("teachers")) {
      plan.teachers.push_back({t.at("teacher_id").get<int>(), t.at("group_id").get<int>(),
                               t.at("weight").get<double>(), t.at("participation").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCategory::kParseError, std::string("plan: ") + e.what());
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Cost history CSV: a format line, a column line, then one row per
// (query, group).

inline void WriteHistory(std::ostream& out, const CostHistory& history) {
  out << kHistoryHeader << '\n' << kHistoryColumns << '\n';
  int labels = 0;
  std::string row;
  for (const auto& r : history.records) {
    if (r.answered) ++labels;
    for (std::size_t g = 0; g < history.group_ids.size(); ++g) {
      row.clear();
      row += std::to_string(r.query_index);
      row += r.answered ? ",1," : ",0,";
      if (r.answered) row += std::to_string(r.label);
      row += ',';
      row += std::to_string(history.group_ids[g]);
      row += ',';
      row += FormatDouble(history.budgets[g]);
      row += ',';
      row += FormatDouble(r.groups[g].epsilon);
      row += ',';
      row += FormatDouble(r.groups[g].best_alpha);
      row += ',';
      row += std::to_string(labels);
      row += '\n';
      out << row;
    }
  }
}

namespace internal {

[[noreturn]] inline void HistoryParseError(long line, const std::string& what) {
  Fail(ErrorCategory::kParseError, "cost history line " + std::to_string(line) + ": " + what);
}

inline std::vector<std::string_view> SplitCsv(std::string_view line) {
  std::vector<std::string_view> fields;
  while (true) {
    const auto comma = line.find(',');
    fields.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return fields;
}

template <typename T>
T ParseNumber(std::string_view field, long line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    HistoryParseError(line, "bad number '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace internal

// Inverse of WriteHistory; exhaustion is recomputed from budgets and curves
// are not stored. final_curves stays empty.
inline CostHistory ReadHistory(std::istream& in) {
  std::string line;
  long line_no = 0;
  auto next = [&]() {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || line != kHistoryHeader) internal::HistoryParseError(1, "missing format line");
  if (!next() || line != kHistoryColumns) internal::HistoryParseError(2, "unexpected columns");

  CostHistory h;
  while (next()) {
    if (line.empty()) continue;
    const auto f = internal::SplitCsv(line);
    if (f.size() != 8) internal::HistoryParseError(line_no, "expected 8 fields");
    const int q = internal::ParseNumber<int>(f[0], line_no);
    const int answered = internal::ParseNumber<int>(f[1], line_no);
    if (answered != 0 && answered != 1) internal::HistoryParseError(line_no, "answered must be 0 or 1");
    const int group = internal::ParseNumber<int>(f[3], line_no);
    const double budget = internal::ParseNumber<double>(f[4], line_no);
    const GroupCost cost{internal::ParseNumber<double>(f[5], line_no),
                         internal::ParseNumber<double>(f[6], line_no)};

    if (h.records.empty() || h.records.back().query_index != q) {
      if (!h.records.empty() && q <= h.records.back().query_index) {
        internal::HistoryParseError(line_no, "query indices must increase");
      }
      if (!h.records.empty() && h.records.back().groups.size() != h.group_ids.size()) {
        internal::HistoryParseError(line_no, "previous query is missing groups");
      }
      QueryRecord r;
      r.query_index = q;
      r.answered = answered == 1;
      r.label = answered ? internal::ParseNumber<int>(f[2], line_no) : kAbstain;
      if (r.answered) ++h.produced_label_count;
      h.records.push_back(std::move(r));
    }
    auto& r = h.records.back();
    const std::size_t slot = r.groups.size();
    if (h.records.size() == 1) {
      h.group_ids.push_back(group);
      h.budgets.push_back(budget);
    } else if (slot >= h.group_ids.size() || h.group_ids[slot] != group) {
      internal::HistoryParseError(line_no, "group layout differs from the first query");
    }
    r.groups.push_back(cost);
    if (!h.exhaustion && cost.epsilon > h.budgets[slot]) h.exhaustion = Exhaustion{q, group};
  }
  if (!h.records.empty() && h.records.back().groups.size() != h.group_ids.size()) {
    internal::HistoryParseError(line_no, "last query is missing groups");
  }
  return h;
}

inline CostHistory ReadHistoryFile(const std::string& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorCategory::kIoError, "cannot open history '" + path + "'");
  return ReadHistory(in);
}

// Plot-ready long format: one row per (run, query, group).
inline void WriteReport(std::ostream& out, const std::vector<CostHistory>& histories) {
  out << kReportColumns << '\n';
  for (std::size_t run = 0; run < histories.size(); ++run) {
    const auto& h = histories[run];
    int labels = 0;
    for (const auto& r : h.records) {
      if (r.answered) ++labels;
      for (std::size_t g = 0; g < h.group_ids.size(); ++g) {
        out << run << ',' << r.query_index << ',' << h.group_ids[g] << ','
            << FormatDouble(r.groups[g].epsilon) << ',' << labels << ',' << (r.answered ? 1 : 0)
            << '\n';
      }
    }
  }
}

inline void WriteSummary(std::ostream& out, const RunSummary& summary,
                         const std::vector<CostHistory>& histories, int processes) {
  out << kSummaryHeader << '\n'
      << "repetition,ensemble,process,labels,exhausted,exhaustion_query,exhaustion_group\n";
  for (std::size_t r = 0; r < summary.runs.size(); ++r) {
    const auto& ex = histories[r].exhaustion;
    out << r << ',' << r / processes << ',' << r % processes << ',' << summary.runs[r].labels << ','
        << (summary.runs[r].exhausted ? 1 : 0) << ',' << (ex ? std::to_string(ex->query_index) : "")
        << ',' << (ex ? std::to_string(ex->group_id) : "") << '\n';
  }
  out << "mean,,," << FormatDouble(summary.mean_labels) << ",,,\n";
  out << "std,,," << FormatDouble(summary.std_labels) << ",,,\n";
}

// Writes to a sibling temporary file and renames it into place.
template <typename Writer>
void WriteFileAtomically(const std::filesystem::path& path, Writer&& writer) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    Require(static_cast<bool>(out), ErrorCategory::kIoError, "cannot write '" + tmp + "'");
    writer(out);
    out.flush();
    Require(static_cast<bool>(out), ErrorCategory::kIoError, "write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  Require(!ec, ErrorCategory::kIoError, "cannot rename '" + tmp + "': " + ec.message());
}

// ---------------------------------------------------------------------------
// From a config to a runnable experiment.

struct PreparedRun {
  RunConfig run;
  // Teacher accuracy used for synthetic votes; NaN when votes are replayed.
  double accuracy;
  bool calibrated;
};

inline PlanResult PlanFromConfig(const ExperimentConfig& c) {
  c.Validate();
  const auto counts = c.BudgetCounts();
  return MakePlan(c.variant, counts, c.voting, c.planner);
}

inline PreparedRun PrepareRun(const ExperimentConfig& c, int jobs = 1) {
  PreparedRun prepared{};
  RunConfig& run = prepared.run;
  run.plan = PlanFromConfig(c);
  run.ensemble_seed = c.ensemble_seed;
  run.voting_seed = c.voting_seed;
  run.ensembles = c.ensembles;
  run.processes = c.processes;
  run.jobs = jobs;
  run.options.free_gate = c.free_gate;
  run.options.stop_at_exhaustion = c.stop_at_exhaustion;
  run.options.order_selection = c.order_selection;
  run.options.reshuffle_period = c.planner.reshuffle_period;
  run.source.difficulty_spread = c.difficulty_spread;
  run.source.num_queries = c.num_queries;
  prepared.accuracy = std::nan("");
  if (c.votes_path) {
    run.source.matrix = LoadVotesFile(*c.votes_path);
    run.ensembles = 1;
  } else if (c.accuracy) {
    prepared.accuracy = *c.accuracy;
  } else {
    prepared.accuracy = CalibrateAccuracy(c.voting.k, c.voting.num_classes, c.difficulty_spread,
                                          c.plurality_accuracy, c.calibration_queries,
                                          c.ensemble_seed)
                            .accuracy;
    prepared.calibrated = true;
  }
  run.source.accuracy = prepared.accuracy;
  return prepared;
}

}  // namespace ppate

#endif  // PPATE_EXPERIMENT_IO_HPP_
