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


#include "privmarket/experiments.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "privmarket/bounds.h"
#include "privmarket/dataset.h"
#include "privmarket/dp_logreg.h"
#include "privmarket/errors.h"
#include "privmarket/joint_optimizer.h"
#include "privmarket/online_mechanism.h"

#ifndef PRIVMARKET_VERSION
#define PRIVMARKET_VERSION "unknown"
#endif

namespace privmarket {
namespace {

using nlohmann::json;

constexpr std::string_view kReplicateStream = "replicate";
constexpr std::string_view kCellStream = "cell";

template <typename T>
void ReadField(const json& obj, const char* key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidArgument,
         std::string("bad \"") + key + "\" field: " + e.what());
  }
}

json SyntheticJson(const SyntheticSpec& spec) {
  json obj = {{"m", spec.m}, {"n", spec.n}, {"rho", spec.rho}};
  if (spec.w_star) {
    obj["w_star"] = std::vector<double>(spec.w_star->begin(),
                                        spec.w_star->end());
  }
  return obj;
}

std::string Hex(std::uint64_t value) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

double VirtualPayments(const Vector& a, double eta, const SensitivityProfile& c,
                       const SensitivityDistribution& dist) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (a[i] > 0.0) total += a[i] * eta * dist.VirtualCost(c[i]);
  }
  return total;
}

}  // namespace

std::string_view LibraryVersion() { return PRIVMARKET_VERSION; }

void ExperimentConfig::Validate() const {
  if (seeds < 1) Fail(ErrorCode::kInvalidArgument, "seeds must be at least 1");
  if (gammas.empty() && ms.empty()) {
    Fail(ErrorCode::kInvalidArgument, "sweep lists are empty");
  }
  for (double g : gammas) {
    if (!(g >= 0.0) || !std::isfinite(g)) {
      Fail(ErrorCode::kInvalidArgument, "gamma values must be finite and >= 0");
    }
  }
  for (Eigen::Index m : ms) {
    if (m < 1) Fail(ErrorCode::kInvalidArgument, "market sizes must be >= 1");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "train fraction must be in (0, 1)");
  }
  if (joint_grid_points < 2) {
    Fail(ErrorCode::kInvalidArgument, "joint grid needs two points");
  }
  if (audit.m < 1 || audit.identity_m < 1 || audit.misreport_points < 1 ||
      audit.grid_points < 2) {
    Fail(ErrorCode::kInvalidArgument, "audit settings out of range");
  }
  params.Validate(true);
  synthetic.Validate();
}

ExperimentConfig GammaSweepDefaults() {
  ExperimentConfig cfg;
  cfg.synthetic = SyntheticSpec{500, 10, 0.1, std::nullopt};
  cfg.distribution = SensitivityDistribution::Uniform(1e-4, 5e-4);
  cfg.params.lambda_reg = 1.0;
  cfg.params.mu = 1.0;
  cfg.params.sigma = 10.0;
  cfg.params.k = 2.0;
  cfg.params.L = 10.0;
  cfg.gammas = {0.1, 0.3, 1.0, 3.0, 10.0};
  cfg.seeds = 15;
  return cfg;
}

ExperimentConfig ScalingDefaults() {
  ExperimentConfig cfg;
  cfg.params.mu = 1.0;
  cfg.params.sigma = 1.0;
  cfg.params.gamma = 1.0;
  cfg.params.k = 1e6;
  cfg.ms = {100, 1000, 10000, 100000};
  cfg.seeds = 20;
  return cfg;
}

ExperimentConfig CompetitiveRatioDefaults() { return ScalingDefaults(); }

ExperimentConfig AuditDefaults() {
  ExperimentConfig cfg;
  cfg.params.k = 1e6;
  cfg.ms = {cfg.audit.m};
  cfg.seeds = 1;
  return cfg;
}

ExperimentConfig ParseExperimentConfig(const std::string& text,
                                       const ExperimentConfig& base) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kIoError, std::string("config is not valid JSON: ") +
                                  e.what());
  }
  if (!obj.is_object()) {
    Fail(ErrorCode::kInvalidArgument, "config must be a JSON object");
  }
  ExperimentConfig cfg = base;
  if (obj.contains("dataset")) {
    const json& d = obj["dataset"];
    if (d.contains("csv")) {
      cfg.dataset_csv = d["csv"].get<std::string>();
    } else if (d.contains("synthetic")) {
      const json& s = d["synthetic"];
      cfg.dataset_csv.reset();
      ReadField(s, "m", cfg.synthetic.m);
      ReadField(s, "n", cfg.synthetic.n);
      ReadField(s, "rho", cfg.synthetic.rho);
      if (s.contains("w_star")) {
        const auto w = s["w_star"].get<std::vector<double>>();
        cfg.synthetic.w_star =
            Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
      }
    } else {
      Fail(ErrorCode::kInvalidArgument,
           "dataset needs a \"csv\" or \"synthetic\" entry");
    }
  }
  if (obj.contains("distribution")) {
    cfg.distribution = ParseDistributionJson(obj["distribution"].dump());
  }
  if (obj.contains("params")) {
    cfg.params = ParseParamsJson(obj["params"].dump(), cfg.params).params;
  }
  ReadField(obj, "gammas", cfg.gammas);
  ReadField(obj, "ms", cfg.ms);
  ReadField(obj, "seeds", cfg.seeds);
  ReadField(obj, "seed", cfg.seed);
  ReadField(obj, "train_fraction", cfg.train_fraction);
  ReadField(obj, "joint_grid_points", cfg.joint_grid_points);
  if (obj.contains("audit")) {
    const json& a = obj["audit"];
    ReadField(a, "m", cfg.audit.m);
    ReadField(a, "identity_m", cfg.audit.identity_m);
    ReadField(a, "draws", cfg.audit.draws);
    ReadField(a, "misreport_points", cfg.audit.misreport_points);
    ReadField(a, "grid_points", cfg.audit.grid_points);
  }
  cfg.Validate();
  return cfg;
}

ExperimentConfig LoadExperimentConfig(const std::string& path,
                                      const ExperimentConfig& base) {
  return ParseExperimentConfig(ReadTextFile(path), base);
}

std::string ExperimentConfigToJson(const ExperimentConfig& cfg) {
  json dataset;
  if (cfg.dataset_csv) {
    dataset = {{"csv", *cfg.dataset_csv}};
  } else {
    dataset = {{"synthetic", SyntheticJson(cfg.synthetic)}};
  }
  const json obj = {
      {"dataset", dataset},
      {"distribution", json::parse(DistributionToJson(cfg.distribution))},
      {"params", json::parse(HyperParamsToJson(cfg.params))},
      {"gammas", cfg.gammas},
      {"ms", cfg.ms},
      {"seeds", cfg.seeds},
      {"seed", cfg.seed},
      {"train_fraction", cfg.train_fraction},
      {"joint_grid_points", cfg.joint_grid_points},
      {"audit",
       {{"m", cfg.audit.m},
        {"identity_m", cfg.audit.identity_m},
        {"draws", cfg.audit.draws},
        {"misreport_points", cfg.audit.misreport_points},
        {"grid_points", cfg.audit.grid_points}}},
  };
  return obj.dump();
}

std::uint64_t ConfigHash(const ExperimentConfig& cfg) {
  return Fnv1a64(ExperimentConfigToJson(cfg));
}

std::string ExperimentManifest(std::string_view experiment,
                               const ExperimentConfig& cfg,
                               const std::string& summary_json) {
  const json obj = {
      {"experiment", std::string(experiment)},
      {"seed", cfg.seed},
      {"config_hash", Hex(ConfigHash(cfg))},
      {"version", std::string(LibraryVersion())},
      {"config", json::parse(ExperimentConfigToJson(cfg))},
      {"summary", json::parse(summary_json)},
  };
  return obj.dump(2) + "\n";
}

int CountIncreases(const std::vector<double>& values) {
  int count = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[i - 1]) ++count;
  }
  return count;
}

int CountDecreases(const std::vector<double>& values) {
  int count = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[i - 1]) ++count;
  }
  return count;
}

double Median(std::vector<double> values) {
  if (values.empty()) Fail(ErrorCode::kInvalidArgument, "median of nothing");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

double Mean(const std::vector<double>& values) {
  if (values.empty()) Fail(ErrorCode::kInvalidArgument, "mean of nothing");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

SeedStats SeedStats::Of(const std::vector<double>& values) {
  return SeedStats{Mean(values), Median(values)};
}

Dataset ExperimentDataset(const ExperimentConfig& cfg) {
  if (cfg.dataset_csv) return LoadDataset(*cfg.dataset_csv);
  return GenerateSynthetic(cfg.synthetic, RngSpec(cfg.seed)).data;
}

std::vector<double> GammaSweepResult::Medians(
    std::string_view variant, SeedStats GammaSweepRow::*stat) const {
  std::vector<double> out;
  for (const GammaSweepRow& row : rows) {
    if (row.variant == variant) out.push_back((row.*stat).median);
  }
  return out;
}

Table GammaSweepResult::ToTable() const {
  Table table;
  table.header = {"gamma",
                  "variant",
                  "misclassification_mean",
                  "misclassification_median",
                  "payments_mean",
                  "payments_median",
                  "overall_mean",
                  "overall_median",
                  "eps_avg_median",
                  "payment_term_absent"};
  for (const GammaSweepRow& r : rows) {
    table.AddRow({FormatNumber(r.gamma), r.variant,
                  FormatNumber(r.misclassification.mean),
                  FormatNumber(r.misclassification.median),
                  FormatNumber(r.payments.mean),
                  FormatNumber(r.payments.median),
                  FormatNumber(r.overall.mean),
                  FormatNumber(r.overall.median),
                  FormatNumber(r.eps_avg.median),
                  r.payment_term_absent ? "1" : "0"});
  }
  return table;
}

GammaSweepResult GammaSweep(const ExperimentConfig& cfg) {
  cfg.Validate();
  if (cfg.gammas.empty()) {
    Fail(ErrorCode::kInvalidArgument, "gamma sweep needs gamma values");
  }
  const RngSpec root(cfg.seed);
  const TrainTestSplit split =
      SplitDataset(ExperimentDataset(cfg), cfg.train_fraction, root);
  const SensitivityProfile c =
      SampleSensitivities(cfg.distribution, split.train.rows(), root);

  GammaSweepResult result;
  const Eigen::Index m = split.train.rows();
  const Vector uniform = Vector::Constant(m, 1.0 / static_cast<double>(m));
  const FitReport baseline =
      FitWithNoise(split.train, uniform, NoiseVector::Zero(split.train.dims(), 1.0),
                   cfg.params.lambda_reg);
  result.baseline_misclassification =
      MisclassificationRate(baseline.weights, split.test);

  JointOptions options;
  options.grid_points = cfg.joint_grid_points;
  for (double gamma : cfg.gammas) {
    for (const char* variant : {"regularized", "naive"}) {
      HyperParams p = cfg.params;
      p.gamma = gamma;
      if (std::string_view(variant) == "naive") {
        p.mu = 0.0;
        p.sigma = 0.0;
      }
      std::vector<double> mis, pay, overall, eps;
      for (int s = 0; s < cfg.seeds; ++s) {
        const JointSolution sol =
            FitJoint(split.train, c, p, cfg.distribution,
                     root.Derive(kReplicateStream, static_cast<std::uint64_t>(s)),
                     options);
        const double err = MisclassificationRate(sol.weights, split.test);
        const double paid = VirtualPayments(sol.a, sol.eta, c, cfg.distribution);
        mis.push_back(err);
        pay.push_back(paid);
        overall.push_back(err + gamma * paid);
        eps.push_back(sol.eps_avg);
      }
      GammaSweepRow row;
      row.gamma = gamma;
      row.variant = variant;
      row.misclassification = SeedStats::Of(mis);
      row.payments = SeedStats::Of(pay);
      row.overall = SeedStats::Of(overall);
      row.eps_avg = SeedStats::Of(eps);
      row.payment_term_absent = gamma == 0.0;
      result.rows.push_back(std::move(row));
    }
    GammaSweepRow base;
    base.gamma = gamma;
    base.variant = "baseline";
    base.misclassification = {result.baseline_misclassification,
                              result.baseline_misclassification};
    base.overall = base.misclassification;
    base.payment_term_absent = true;
    result.rows.push_back(std::move(base));
  }
  return result;
}

Table ScalingResult::ToTable() const {
  Table table;
  table.header = {"m", "proxy_loss_mean", "proxy_loss_median",
                  "proxy_loss_min"};
  for (const ScalingRow& r : rows) {
    table.AddRow({std::to_string(r.m), FormatNumber(r.proxy_loss.mean),
                  FormatNumber(r.proxy_loss.median), FormatNumber(r.min_loss)});
  }
  return table;
}

ScalingResult ScalingExperiment(const ExperimentConfig& cfg) {
  cfg.Validate();
  if (cfg.ms.empty()) {
    Fail(ErrorCode::kInvalidArgument, "scaling needs market sizes");
  }
  const RngSpec root(cfg.seed);
  ScalingResult result;
  std::vector<double> xs, ys;
  for (Eigen::Index m : cfg.ms) {
    const RngSpec cell = root.Derive(kCellStream, static_cast<std::uint64_t>(m));
    std::vector<double> losses;
    for (int s = 0; s < cfg.seeds; ++s) {
      const SensitivityProfile c = SampleSensitivities(
          cfg.distribution, m,
          cell.Derive(kReplicateStream, static_cast<std::uint64_t>(s)));
      losses.push_back(SolveAllocation(c, cfg.params, cfg.distribution).proxy_loss);
    }
    ScalingRow row;
    row.m = m;
    row.proxy_loss = SeedStats::Of(losses);
    row.min_loss = *std::min_element(losses.begin(), losses.end());
    xs.push_back(std::log(static_cast<double>(m)));
    ys.push_back(std::log(row.proxy_loss.mean));
    result.rows.push_back(row);
  }
  if (xs.size() >= 2) {
    const double mx = Mean(xs);
    const double my = Mean(ys);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    result.slope = sxy / sxx;
    result.intercept = my - result.slope * mx;
  } else {
    result.slope = std::numeric_limits<double>::quiet_NaN();
    result.intercept = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

Table CompetitiveRatioResult::ToTable() const {
  Table table;
  table.header = {"m",
                  "ratio_mean",
                  "ratio_median",
                  "ratio_min",
                  "online_loss_median",
                  "offline_loss_median"};
  for (const CompetitiveRatioRow& r : rows) {
    table.AddRow({std::to_string(r.m), FormatNumber(r.ratio.mean),
                  FormatNumber(r.ratio.median), FormatNumber(r.min_ratio),
                  FormatNumber(r.online_loss.median),
                  FormatNumber(r.offline_loss.median)});
  }
  return table;
}

CompetitiveRatioResult CompetitiveRatioExperiment(const ExperimentConfig& cfg) {
  cfg.Validate();
  if (cfg.ms.empty()) {
    Fail(ErrorCode::kInvalidArgument, "competitive ratio needs market sizes");
  }
  const RngSpec root(cfg.seed);
  const HyperParams& p = cfg.params;
  CompetitiveRatioResult result;
  std::vector<double> medians;
  for (Eigen::Index m : cfg.ms) {
    const RngSpec cell = root.Derive(kCellStream, static_cast<std::uint64_t>(m));
    OnlineConfig online;
    online.m_planned = m;
    std::vector<double> ratios, on_losses, off_losses;
    for (int s = 0; s < cfg.seeds; ++s) {
      const SensitivityProfile c = SampleSensitivities(
          cfg.distribution, m,
          cell.Derive(kReplicateStream, static_cast<std::uint64_t>(s)));
      const double offline = SolveAllocation(c, p, cfg.distribution).proxy_loss;
      const Vector eps = OnlineAllocation(c, p, online, cfg.distribution);
      const double on =
          ProxyLoss(c, eps, p.mu, p.sigma, p.gamma, cfg.distribution);
      ratios.push_back(on / offline);
      on_losses.push_back(on);
      off_losses.push_back(offline);
    }
    CompetitiveRatioRow row;
    row.m = m;
    row.ratio = SeedStats::Of(ratios);
    row.min_ratio = *std::min_element(ratios.begin(), ratios.end());
    row.online_loss = SeedStats::Of(on_losses);
    row.offline_loss = SeedStats::Of(off_losses);
    medians.push_back(row.ratio.median);
    result.rows.push_back(row);
  }
  result.trend_violations = CountIncreases(medians);
  return result;
}

SelectionResult SelectHyperparams(const std::vector<HyperParams>& candidates,
                                  const Dataset& train,
                                  const Dataset& validation,
                                  const SensitivityProfile& c,
                                  const SensitivityDistribution& dist,
                                  const RngSpec& rng,
                                  const OfflineOptions& options) {
  if (candidates.empty()) {
    Fail(ErrorCode::kInvalidArgument, "no candidate hyperparameters");
  }
  SelectionResult result;
  double best = kInfinity;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const MechanismOutcome outcome =
        RunOfflineMechanism(train, c, candidates[i], dist, rng, options);
    const double score = MisclassificationRate(outcome.weights, validation) +
                         candidates[i].gamma * outcome.payments.total();
    result.scores.push_back(score);
    if (i == 0 || score < best) {
      best = score;
      result.index = i;
    }
  }
  result.params = candidates[result.index];
  return result;
}

IcAuditReport RunIcAudit(const ExperimentConfig& cfg) {
  cfg.Validate();
  const SensitivityProfile c =
      SampleSensitivities(cfg.distribution, cfg.audit.m, RngSpec(cfg.seed));
  QuadratureConfig q;
  q.grid_points = cfg.audit.grid_points;
  return AuditOfflineMechanism(c, cfg.params, cfg.distribution, q,
                               cfg.audit.misreport_points);
}

PaymentIdentityResult RunPaymentIdentity(const ExperimentConfig& cfg) {
  cfg.Validate();
  QuadratureConfig q;
  q.grid_points = cfg.audit.grid_points;
  return PaymentIdentityCheck(cfg.distribution, cfg.params,
                              cfg.audit.identity_m, cfg.audit.draws,
                              RngSpec(cfg.seed), q);
}

}  // namespace privmarket
