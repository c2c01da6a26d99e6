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

// ppate: plan, simulate, run and report personalized PATE voting experiments.
//
//   ppate plan     --config exp.json [--out plan.json]
//   ppate simulate --config exp.json --out votes.csv [--ensemble 0]
//   ppate run      --config exp.json [--out-dir out] [--jobs 4]
//   ppate replay   --config exp.json --votes votes.csv [--out-dir out]
//   ppate report   --out report.csv out/history_r000.csv ...
//
// Every config field can be overridden by a flag. Failures print
// "error[<category>]: <message>" and exit with a category-specific code.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ppate/ppate.hpp"

namespace {

using ppate::ErrorCategory;
using ppate::ExperimentConfig;

// Flag values that override the config file when given.
struct Overrides {
  std::string config_path;
  std::optional<std::string> variant;
  std::optional<int> teachers;
  std::optional<double> sigma1;
  std::optional<double> sigma2;
  std::optional<double> threshold;
  std::optional<double> delta;
  std::optional<int> classes;
  std::optional<int> label_cap;
  std::vector<std::string> budgets;
  std::optional<long> num_points;
  std::optional<double> accuracy;
  std::optional<double> plurality_accuracy;
  std::optional<double> difficulty_spread;
  std::optional<int> num_queries;
  std::optional<std::string> votes;
  std::optional<std::uint64_t> ensemble_seed;
  std::optional<std::uint64_t> voting_seed;
  std::optional<int> ensembles;
  std::optional<int> processes;
  std::optional<double> precision;
  std::optional<int> duplicate_cap;
  std::optional<double> vanishing_exponent;
  std::optional<double> vanishing_noise_power;
  std::optional<int> reshuffle_period;
  std::optional<std::string> baseline;
  std::optional<std::string> order_selection;
  bool free_gate = false;
  bool stop_at_exhaustion = false;
};

void AddConfigFlags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "experiment config (JSON)");
  cmd->add_option("--variant", o.variant, "plain|confident|upsampling|vanishing|weighting");
  cmd->add_option("--teachers", o.teachers, "number of teachers k");
  cmd->add_option("--sigma1", o.sigma1, "consensus-check noise std");
  cmd->add_option("--sigma2", o.sigma2, "answer noise std");
  cmd->add_option("--threshold", o.threshold, "consensus threshold T");
  cmd->add_option("--delta", o.delta, "delta for (epsilon, delta)-DP");
  cmd->add_option("--classes", o.classes, "number of classes");
  cmd->add_option("--label-cap", o.label_cap, "stop after this many labels");
  cmd->add_option("--budget", o.budgets,
                  "budget share EPS:RATIO, repeatable; EPS may be written logN for ln(N)");
  cmd->add_option("--num-points", o.num_points, "number of sensitive points");
  cmd->add_option("--accuracy", o.accuracy, "per-teacher accuracy (skips calibration)");
  cmd->add_option("--plurality-accuracy", o.plurality_accuracy, "calibration target");
  cmd->add_option("--difficulty-spread", o.difficulty_spread, "std of per-query difficulty");
  cmd->add_option("--num-queries", o.num_queries, "public queries per ensemble");
  cmd->add_option("--votes", o.votes, "replay this vote-matrix file");
  cmd->add_option("--ensemble-seed", o.ensemble_seed, "master seed for ensembles");
  cmd->add_option("--voting-seed", o.voting_seed, "master seed for voting noise");
  cmd->add_option("--ensembles", o.ensembles, "teacher ensembles");
  cmd->add_option("--processes", o.processes, "voting processes per ensemble");
  cmd->add_option("--precision", o.precision, "upsampling duplicate precision");
  cmd->add_option("--duplicate-cap", o.duplicate_cap, "largest allowed duplicate count");
  cmd->add_option("--vanishing-exponent", o.vanishing_exponent, "frequency exponent");
  cmd->add_option("--vanishing-noise-power", o.vanishing_noise_power,
                  "noise scales with active_fraction^power");
  cmd->add_option("--reshuffle-period", o.reshuffle_period, "queries between reshuffles");
  cmd->add_option("--baseline", o.baseline, "min|average|max budget for baselines");
  cmd->add_option("--order-selection", o.order_selection, "reference|grid");
  cmd->add_flag("--free-gate", o.free_gate, "do not charge the consensus check");
  cmd->add_flag("--stop-at-exhaustion", o.stop_at_exhaustion, "stop at the first exhaustion");
}

double ParseEpsilon(const std::string& text) {
  try {
    std::size_t used = 0;
    if (text.rfind("log", 0) == 0) {
      const double base = std::stod(text.substr(3), &used);
      if (used + 3 == text.size() && base >= 1.0) return std::log(base);
    } else {
      const double value = std::stod(text, &used);
      if (used == text.size()) return value;
    }
  } catch (const std::exception&) {
  }
  ppate::Fail(ErrorCategory::kParseError, "bad budget epsilon '" + text + "'");
}

ExperimentConfig ResolveConfig(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) c = ppate::LoadConfigFile(o.config_path);
  if (o.variant) c.variant = ppate::ParseKind(*o.variant);
  if (o.teachers) c.voting.k = *o.teachers;
  if (o.sigma1) c.voting.sigma1 = *o.sigma1;
  if (o.sigma2) c.voting.sigma2 = *o.sigma2;
  if (o.threshold) c.voting.threshold = *o.threshold;
  if (o.delta) c.voting.delta = *o.delta;
  if (o.classes) c.voting.num_classes = *o.classes;
  if (o.label_cap) c.voting.label_cap = *o.label_cap;
  if (!o.budgets.empty()) {
    c.budgets.clear();
    for (const auto& b : o.budgets) {
      const auto colon = b.find(':');
      if (colon == std::string::npos) {
        ppate::Fail(ErrorCategory::kParseError, "budget must be EPS:RATIO, got '" + b + "'");
      }
      double ratio = 0.0;
      try {
        ratio = std::stod(b.substr(colon + 1));
      } catch (const std::exception&) {
        ppate::Fail(ErrorCategory::kParseError, "bad budget ratio in '" + b + "'");
      }
      c.budgets.push_back({ParseEpsilon(b.substr(0, colon)), ratio});
    }
  }
  if (o.num_points) c.num_points = *o.num_points;
  if (o.accuracy) c.accuracy = *o.accuracy;
  if (o.plurality_accuracy) c.plurality_accuracy = *o.plurality_accuracy;
  if (o.difficulty_spread) c.difficulty_spread = *o.difficulty_spread;
  if (o.num_queries) c.num_queries = *o.num_queries;
  if (o.votes) c.votes_path = *o.votes;
  if (o.ensemble_seed) c.ensemble_seed = *o.ensemble_seed;
  if (o.voting_seed) c.voting_seed = *o.voting_seed;
  if (o.ensembles) c.ensembles = *o.ensembles;
  if (o.processes) c.processes = *o.processes;
  if (o.precision) c.planner.precision = *o.precision;
  if (o.duplicate_cap) c.planner.duplicate_cap = *o.duplicate_cap;
  if (o.vanishing_exponent) c.planner.vanishing_exponent = *o.vanishing_exponent;
  if (o.vanishing_noise_power) c.planner.vanishing_noise_power = *o.vanishing_noise_power;
  if (o.reshuffle_period) c.planner.reshuffle_period = *o.reshuffle_period;
  if (o.baseline) c.planner.baseline = ppate::internal::ParseBaseline(*o.baseline);
  if (o.order_selection) c.order_selection = ppate::internal::ParseSelection(*o.order_selection);
  if (o.free_gate) c.free_gate = true;
  if (o.stop_at_exhaustion) c.stop_at_exhaustion = true;
  c.Validate();
  return c;
}

void WriteOrPrint(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  ppate::WriteFileAtomically(path, [&](std::ostream& out) { out << content; });
}

int CmdPlan(const Overrides& o, const std::string& out) {
  const auto config = ResolveConfig(o);
  const auto plan = ppate::PlanFromConfig(config);
  WriteOrPrint(out, ppate::PlanToJson(plan).dump(2) + "\n");
  return 0;
}

int CmdSimulate(const Overrides& o, const std::string& out, int ensemble) {
  auto config = ResolveConfig(o);
  config.votes_path.reset();
  const auto prepared = ppate::PrepareRun(config);
  ppate::Require(ensemble >= 0, ErrorCategory::kInvalidParameter, "--ensemble must be >= 0");
  const auto votes = ppate::EnsembleVotes(prepared.run, ensemble);
  std::ostringstream buf;
  ppate::WriteVotes(buf, votes);
  WriteOrPrint(out, buf.str());
  std::cerr << "teachers=" << votes.num_teachers() << " queries=" << votes.num_queries()
            << " accuracy=" << ppate::FormatDouble(prepared.accuracy)
            << " plurality_accuracy=" << ppate::FormatDouble(ppate::PluralityAccuracy(votes))
            << '\n';
  return 0;
}

int CmdRun(const Overrides& o, const std::string& out_dir_flag, int jobs) {
  const auto config = ResolveConfig(o);
  const auto prepared = ppate::PrepareRun(config, jobs);
  const auto histories = ppate::RunRepetitions(prepared.run);
  const auto summary = ppate::Summarize(histories);

  const std::filesystem::path dir = out_dir_flag.empty() ? config.output_dir : out_dir_flag;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  ppate::Require(!ec, ErrorCategory::kIoError, "cannot create '" + dir.string() + "'");

  for (std::size_t r = 0; r < histories.size(); ++r) {
    std::ostringstream name;
    name << "history_r" << std::setw(3) << std::setfill('0') << r << ".csv";
    ppate::WriteFileAtomically(dir / name.str(),
                               [&](std::ostream& out) { ppate::WriteHistory(out, histories[r]); });
  }
  ppate::WriteFileAtomically(dir / "summary.csv", [&](std::ostream& out) {
    ppate::WriteSummary(out, summary, histories, prepared.run.processes);
  });
  ppate::WriteFileAtomically(dir / "plan.json", [&](std::ostream& out) {
    out << ppate::PlanToJson(prepared.run.plan).dump(2) << '\n';
  });
  ppate::WriteFileAtomically(dir / "config.json",
                             [&](std::ostream& out) { out << ppate::SerializeConfig(config); });

  std::cout << "variant,repetitions,teacher_accuracy,mean_labels,std_labels\n"
            << ppate::KindName(config.variant) << ',' << histories.size() << ','
            << ppate::FormatDouble(prepared.accuracy) << ','
            << ppate::FormatDouble(summary.mean_labels) << ','
            << ppate::FormatDouble(summary.std_labels) << '\n';
  return 0;
}

int CmdReport(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<ppate::CostHistory> histories;
  for (const auto& path : inputs) histories.push_back(ppate::ReadHistoryFile(path));
  std::ostringstream buf;
  ppate::WriteReport(buf, histories);
  WriteOrPrint(out, buf.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized PATE privacy accounting and voting simulation"};
  app.require_subcommand(1);

  Overrides plan_flags;
  std::string plan_out;
  auto* plan = app.add_subcommand("plan", "translate budgets into variant parameters");
  AddConfigFlags(plan, plan_flags);
  plan->add_option("--out", plan_out, "plan file (default stdout)");

  Overrides sim_flags;
  std::string sim_out;
  int sim_ensemble = 0;
  auto* simulate = app.add_subcommand("simulate", "emit a synthetic vote matrix");
  AddConfigFlags(simulate, sim_flags);
  simulate->add_option("--out", sim_out, "vote-matrix file (default stdout)");
  simulate->add_option("--ensemble", sim_ensemble, "ensemble index");

  Overrides run_flags;
  std::string run_out;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "run voting processes and write cost histories");
  AddConfigFlags(run, run_flags);
  run->add_option("--out-dir", run_out, "output directory (default from config)");
  run->add_option("--jobs", jobs, "parallel ensembles")->check(CLI::PositiveNumber);

  Overrides replay_flags;
  std::string replay_out;
  auto* replay = app.add_subcommand("replay", "run voting over a recorded vote matrix");
  AddConfigFlags(replay, replay_flags);
  replay->get_option("--votes")->required();
  replay->add_option("--out-dir", replay_out, "output directory (default from config)");

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "long-format CSV of cost trajectories");
  report->add_option("histories", report_inputs, "cost-history files");
  report->add_option("--out", report_out, "report file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan) return CmdPlan(plan_flags, plan_out);
    if (*simulate) return CmdSimulate(sim_flags, sim_out, sim_ensemble);
    if (*run) return CmdRun(run_flags, run_out, jobs);
    if (*replay) return CmdRun(replay_flags, replay_out, 1);
    if (*report) return CmdReport(report_inputs, report_out);
  } catch (const ppate::Error& e) {
    std::cerr << "error[" << ppate::CategoryName(e.category()) << "]: " << e.what() << '\n';
    return ppate::ExitCode(e.category());
  }
  return 1;
}
