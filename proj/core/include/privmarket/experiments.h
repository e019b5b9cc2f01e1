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


#ifndef PRIVMARKET_EXPERIMENTS_H_
#define PRIVMARKET_EXPERIMENTS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privmarket/io.h"
#include "privmarket/offline_mechanism.h"
#include "privmarket/payments.h"
#include "privmarket/rng.h"
#include "privmarket/sensitivity.h"
#include "privmarket/synthetic.h"
#include "privmarket/types.h"

namespace privmarket {

std::string_view LibraryVersion();

struct AuditSettings {
  Eigen::Index m = 20;           // market size for the IC/IR audit
  Eigen::Index identity_m = 10;  // market size for the payment identity
  std::int64_t draws = 10000;    // Monte-Carlo draws for the payment identity
  int misreport_points = 64;
  int grid_points = 256;  // payment quadrature points
};

struct ExperimentConfig {
  std::optional<std::string> dataset_csv;  // synthetic data when unset
  SyntheticSpec synthetic;
  SensitivityDistribution distribution =
      SensitivityDistribution::Uniform(0.0, 1.0);
  HyperParams params;
  std::vector<double> gammas;
  std::vector<Eigen::Index> ms;
  int seeds = 15;
  std::uint64_t seed = 1;
  double train_fraction = 0.8;
  int joint_grid_points = 50;
  AuditSettings audit;

  void Validate() const;
};

// Starting points for each experiment. The γ sweep runs on synthetic
// separable data with small sensitivities so that buying privacy is cheap
// relative to the classification loss; the others use c ~ U[0, 1] with a
// cap loose enough never to bind.
ExperimentConfig GammaSweepDefaults();
ExperimentConfig ScalingDefaults();
ExperimentConfig CompetitiveRatioDefaults();
ExperimentConfig AuditDefaults();

// Keys: dataset {csv | synthetic {m, n, rho, w_star}}, distribution, params,
// gammas, ms, seeds, seed, train_fraction, joint_grid_points,
// audit {m, identity_m, draws, misreport_points, grid_points}. Missing keys
// keep their value in `base`.
ExperimentConfig ParseExperimentConfig(const std::string& text,
                                       const ExperimentConfig& base);
ExperimentConfig LoadExperimentConfig(const std::string& path,
                                      const ExperimentConfig& base);

// Canonical JSON with every field spelled out, and its FNV-1a hash.
std::string ExperimentConfigToJson(const ExperimentConfig& cfg);
std::uint64_t ConfigHash(const ExperimentConfig& cfg);

// Manifest document: experiment name, seed, config hash, library version,
// canonical config and a free-form summary object given as JSON text.
std::string ExperimentManifest(std::string_view experiment,
                               const ExperimentConfig& cfg,
                               const std::string& summary_json = "{}");

// Number of adjacent pairs that break a non-decreasing (or non-increasing)
// order.
int CountIncreases(const std::vector<double>& values);
int CountDecreases(const std::vector<double>& values);

double Median(std::vector<double> values);
double Mean(const std::vector<double>& values);

// Summary of one statistic over seeds.
struct SeedStats {
  double mean = 0.0;
  double median = 0.0;
  static SeedStats Of(const std::vector<double>& values);
};

struct GammaSweepRow {
  double gamma = 0.0;
  std::string variant;  // "regularized", "naive" or "baseline"
  SeedStats misclassification;
  SeedStats payments;
  SeedStats overall;  // misclassification + γ·payments
  SeedStats eps_avg;
  bool payment_term_absent = false;  // γ = 0
};

struct GammaSweepResult {
  std::vector<GammaSweepRow> rows;
  double baseline_misclassification = 0.0;

  // Medians of one statistic over the rows of a variant, in γ order.
  std::vector<double> Medians(std::string_view variant,
                              SeedStats GammaSweepRow::*stat) const;
  Table ToTable() const;
};

// Per γ and noise seed, fits the joint optimizer on the training split and
// scores the test split. Payments are the expected payments η·Σ a_i ψ(c_i).
// The naive variant sets μ = σ = 0; the baseline is the non-private fit with
// uniform weights.
GammaSweepResult GammaSweep(const ExperimentConfig& cfg);

struct ScalingRow {
  Eigen::Index m = 0;
  SeedStats proxy_loss;
  double min_loss = 0.0;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  double slope = 0.0;  // least-squares slope of log mean loss on log m
  double intercept = 0.0;

  Table ToTable() const;
};

// Optimal offline proxy loss per market size.
ScalingResult ScalingExperiment(const ExperimentConfig& cfg);

struct CompetitiveRatioRow {
  Eigen::Index m = 0;
  SeedStats ratio;
  double min_ratio = 0.0;
  SeedStats online_loss;
  SeedStats offline_loss;
};

struct CompetitiveRatioResult {
  std::vector<CompetitiveRatioRow> rows;
  int trend_violations = 0;  // adjacent increases of the median ratio

  Table ToTable() const;
};

// Online and offline proxy loss on the same sensitivity draw per (m, seed),
// with the online mechanism planned for exactly m arrivals.
CompetitiveRatioResult CompetitiveRatioExperiment(const ExperimentConfig& cfg);

struct SelectionResult {
  std::size_t index = 0;
  HyperParams params;
  std::vector<double> scores;  // misclassification + γ·Σt on validation
};

// Runs the offline mechanism per candidate on the training data and keeps
// the lowest validation score; ties go to the earliest candidate.
SelectionResult SelectHyperparams(const std::vector<HyperParams>& candidates,
                                  const Dataset& train,
                                  const Dataset& validation,
                                  const SensitivityProfile& c,
                                  const SensitivityDistribution& dist,
                                  const RngSpec& rng,
                                  const OfflineOptions& options = {});

// Audits on a market drawn from the config's distribution.
IcAuditReport RunIcAudit(const ExperimentConfig& cfg);
PaymentIdentityResult RunPaymentIdentity(const ExperimentConfig& cfg);

// The dataset the config points at: the CSV file or the synthetic generator.
Dataset ExperimentDataset(const ExperimentConfig& cfg);

}  // namespace privmarket

#endif  // PRIVMARKET_EXPERIMENTS_H_
