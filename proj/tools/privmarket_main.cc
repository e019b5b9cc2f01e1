//
// Copyright 2026 The privmarket Authors
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


// Command-line front end: runs the mechanisms on CSV data, the experiment
// harness, and the incentive audits.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "privmarket/dataset.h"
#include "privmarket/errors.h"
#include "privmarket/experiments.h"
#include "privmarket/io.h"
#include "privmarket/joint_optimizer.h"
#include "privmarket/offline_mechanism.h"
#include "privmarket/online_mechanism.h"
#include "privmarket/payments.h"

namespace {

using namespace privmarket;
using nlohmann::json;

// Audit thresholds reported alongside the measured values.
constexpr double kIcTolerance = 1e-5;
constexpr double kIrTolerance = 1e-8;
constexpr double kIdentityTolerance = 0.02;

struct MechanismArgs {
  std::string data;
  std::string sens;
  std::string params;
  std::uint64_t seed = 0;
  std::string out;
  Eigen::Index m_planned = 0;
};

// The distribution comes from a dist-json sensitivity file or, failing that,
// from the params file.
SensitivityDistribution PickDistribution(
    const std::optional<SensitivityDistribution>& from_sens,
    const ParamsFile& params) {
  if (from_sens) return *from_sens;
  if (params.distribution) return *params.distribution;
  Fail(ErrorCode::kInvalidArgument,
       "no sensitivity distribution: pass a dist-json file or add a "
       "\"distribution\" object to the params file");
}

void WriteOutcome(const MechanismOutcome& outcome, const std::string& path) {
  WriteTextFile(path, OutcomeToJson(outcome));
  std::cerr << "wrote " << path << "\n";
}

int RunOffline(const MechanismArgs& args) {
  const Dataset data = LoadDataset(args.data);
  const ParamsFile pf = LoadParamsFile(args.params);
  std::optional<SensitivityDistribution> dist;
  const SensitivityProfile c =
      LoadSensitivities(args.sens, data.rows(), RngSpec(args.seed), &dist);
  WriteOutcome(RunOfflineMechanism(data, c, pf.params, PickDistribution(dist, pf),
                                   RngSpec(args.seed)),
               args.out);
  return 0;
}

int RunOnline(const MechanismArgs& args) {
  const Dataset data = LoadDataset(args.data);
  const ParamsFile pf = LoadParamsFile(args.params);
  std::optional<SensitivityDistribution> dist;
  const SensitivityProfile stream =
      LoadSensitivities(args.sens, data.rows(), RngSpec(args.seed), &dist);
  OnlineConfig cfg;
  cfg.m_planned = args.m_planned > 0 ? args.m_planned : data.rows();
  WriteOutcome(RunOnlineMechanism(data, stream, pf.params, cfg,
                                  PickDistribution(dist, pf), RngSpec(args.seed)),
               args.out);
  return 0;
}

int RunJoint(const MechanismArgs& args) {
  const Dataset data = LoadDataset(args.data);
  const ParamsFile pf = LoadParamsFile(args.params);
  std::optional<SensitivityDistribution> dist;
  const SensitivityProfile c =
      LoadSensitivities(args.sens, data.rows(), RngSpec(args.seed), &dist);
  WriteOutcome(JointOutcome(data, c, pf.params, PickDistribution(dist, pf),
                            RngSpec(args.seed)),
               args.out);
  return 0;
}

void WriteExperiment(const std::string& out_dir, const std::string& name,
                     const Table& table, const ExperimentConfig& cfg,
                     const json& summary) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  WriteCsvFile(table, (dir / (name + ".csv")).string());
  WriteTextFile((dir / (name + "_manifest.json")).string(),
                ExperimentManifest(name, cfg, summary.dump()));
  WriteCsv(table, std::cout);
  std::cout << summary.dump(2) << "\n";
}

int RunExperiment(const std::string& which, const std::string& config,
                  const std::string& out_dir) {
  if (which == "gamma-sweep") {
    const ExperimentConfig cfg = config.empty()
                                     ? GammaSweepDefaults()
                                     : LoadExperimentConfig(config, GammaSweepDefaults());
    const GammaSweepResult r = GammaSweep(cfg);
    const auto pay = r.Medians("regularized", &GammaSweepRow::payments);
    const auto mis = r.Medians("regularized", &GammaSweepRow::misclassification);
    const auto reg = r.Medians("regularized", &GammaSweepRow::overall);
    const auto naive = r.Medians("naive", &GammaSweepRow::overall);
    int wins = 0;
    for (std::size_t i = 0; i < reg.size(); ++i) wins += reg[i] <= naive[i];
    const json summary = {
        {"baseline_misclassification", r.baseline_misclassification},
        {"payment_increases", CountIncreases(pay)},
        {"misclassification_decreases", CountDecreases(mis)},
        {"regularized_wins", wins},
        {"gamma_count", reg.size()}};
    WriteExperiment(out_dir, "gamma_sweep", r.ToTable(), cfg, summary);
    return 0;
  }
  if (which == "scaling") {
    const ExperimentConfig cfg = config.empty()
                                     ? ScalingDefaults()
                                     : LoadExperimentConfig(config, ScalingDefaults());
    const ScalingResult r = ScalingExperiment(cfg);
    const json summary = {{"slope", r.slope}, {"intercept", r.intercept}};
    WriteExperiment(out_dir, "scaling", r.ToTable(), cfg, summary);
    return 0;
  }
  if (which == "competitive-ratio") {
    const ExperimentConfig cfg =
        config.empty() ? CompetitiveRatioDefaults()
                       : LoadExperimentConfig(config, CompetitiveRatioDefaults());
    const CompetitiveRatioResult r = CompetitiveRatioExperiment(cfg);
    const json summary = {{"trend_violations", r.trend_violations}};
    WriteExperiment(out_dir, "competitive_ratio", r.ToTable(), cfg, summary);
    return 0;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown experiment " + which);
}

int RunAudit(const std::string& which, const std::string& config) {
  const ExperimentConfig cfg =
      config.empty() ? AuditDefaults() : LoadExperimentConfig(config, AuditDefaults());
  json report;
  bool pass = false;
  if (which == "ic" || which == "ir") {
    const IcAuditReport r = RunIcAudit(cfg);
    if (which == "ic") {
      const double bound = kIcTolerance * r.instance_scale();
      pass = r.max_violation() <= bound;
      report = {{"max_violation", r.max_violation()},
                {"instance_scale", r.instance_scale()},
                {"bound", bound},
                {"sellers", r.ic_violation.size()},
                {"misreports", r.misreports.size()}};
    } else {
      pass = r.max_ir_cost() <= kIrTolerance;
      report = {{"max_truthful_cost", r.max_ir_cost()},
                {"bound", kIrTolerance},
                {"sellers", r.ir_cost.size()}};
    }
  } else if (which == "payment-identity") {
    const PaymentIdentityResult r = RunPaymentIdentity(cfg);
    pass = r.gap < kIdentityTolerance;
    report = {{"mean_payments", r.mean_payments},
              {"mean_virtual_payments", r.mean_virtual_payments},
              {"relative_gap", r.gap},
              {"standard_error", r.standard_error},
              {"draws", r.draws},
              {"bound", kIdentityTolerance}};
  } else {
    Fail(ErrorCode::kInvalidArgument, "unknown audit " + which);
  }
  report["audit"] = which;
  report["pass"] = pass;
  std::cout << report.dump(2) << "\n";
  return pass ? 0 : 1;
}

void AddMechanismOptions(CLI::App* cmd, MechanismArgs& args,
                         const char* sens_flag, const char* sens_help) {
  cmd->add_option("--data", args.data, "dataset CSV (features..., label)")
      ->required();
  cmd->add_option(sens_flag, args.sens, sens_help)->required();
  cmd->add_option("--params", args.params, "hyperparameter JSON")->required();
  cmd->add_option("--seed", args.seed, "random seed")->required();
  cmd->add_option("--out", args.out, "output JSON path")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privmarket: private data market mechanisms"};
  app.require_subcommand(1);

  MechanismArgs margs;
  auto* mechanism = app.add_subcommand("mechanism", "run a market mechanism");
  mechanism->require_subcommand(1);
  auto* offline = mechanism->add_subcommand("offline", "offline mechanism");
  AddMechanismOptions(offline, margs, "--sens",
                      "sensitivity CSV or distribution JSON");
  auto* online = mechanism->add_subcommand("online", "posted-price mechanism");
  AddMechanismOptions(online, margs, "--stream",
                      "arrival stream CSV or distribution JSON");
  online->add_option("--m-planned", margs.m_planned, "planned arrivals")
      ->required()
      ->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit", "fit a model");
  fit->require_subcommand(1);
  auto* joint = fit->add_subcommand("joint", "joint allocation and model fit");
  AddMechanismOptions(joint, margs, "--sens", "sensitivity CSV");

  std::string config;
  std::string out_dir;
  auto* experiment = app.add_subcommand("experiment", "run an experiment");
  experiment->require_subcommand(1);
  for (const char* name : {"gamma-sweep", "scaling", "competitive-ratio"}) {
    auto* cmd = experiment->add_subcommand(name);
    cmd->add_option("--config", config, "experiment config JSON");
    cmd->add_option("--out-dir", out_dir, "output directory")->required();
  }

  auto* audit = app.add_subcommand("audit", "incentive audits");
  audit->require_subcommand(1);
  for (const char* name : {"ic", "ir", "payment-identity"}) {
    audit->add_subcommand(name)->add_option("--config", config,
                                            "audit config JSON");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (offline->parsed()) return RunOffline(margs);
    if (online->parsed()) return RunOnline(margs);
    if (joint->parsed()) return RunJoint(margs);
    for (auto* cmd : experiment->get_subcommands()) {
      return RunExperiment(cmd->get_name(), config, out_dir);
    }
    for (auto* cmd : audit->get_subcommands()) {
      return RunAudit(cmd->get_name(), config);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
