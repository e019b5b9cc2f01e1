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


#ifndef PRIVMARKET_PAYMENTS_H_
#define PRIVMARKET_PAYMENTS_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "privmarket/rng.h"
#include "privmarket/sensitivity.h"
#include "privmarket/types.h"

namespace privmarket {

enum class UpperLimitPolicy {
  kCutoffDetect,  // integrate up to where ε_i(z) first drops below tolerance
  kFixed,         // integrate up to z_max
};

struct QuadratureConfig {
  int grid_points = 256;
  UpperLimitPolicy policy = UpperLimitPolicy::kCutoffDetect;
  // The fixed upper limit, or a ceiling on the detected cutoff. Callers pass
  // the upper end of the sensitivity support here.
  double z_max = kInfinity;
  double tolerance = 1e-12;
  // Recompute with the grid refined twofold and report the relative change.
  bool self_check = false;

  void Validate() const;
};

// z ↦ ε_i(c₋ᵢ, z).
using AllocationRule = std::function<double(double)>;

struct PaymentReport {
  double payment = 0.0;
  double epsilon_at_report = 0.0;
  double upper_limit = 0.0;
  std::int64_t evaluations = 0;
  // |t(2N−1 points) − t(N points)| / t; zero unless self_check was requested.
  double self_check_change = 0.0;
};

// t_i = c_i·ε_i(c_i) + ∫_{c_i}^{z_max} ε_i(z) dz by the composite trapezoid
// rule. `cutoff_hint`, when finite, is where the caller knows ε_i reaches
// zero; it is checked and used as the upper limit. Throws
// kNonMonotoneAllocation if ε_i increases by more than 1e−9 between grid
// points.
PaymentReport ComputePayment(const AllocationRule& eps, double c_i,
                             const QuadratureConfig& q,
                             double cutoff_hint = kInfinity);

double PaymentForSeller(const AllocationRule& eps, double c_i,
                        const QuadratureConfig& q,
                        double cutoff_hint = kInfinity);

// What a seller receives for a given report.
struct ReportOutcome {
  double epsilon = 0.0;
  double payment = 0.0;
};
using ReportedMechanism = std::function<ReportOutcome(double)>;

// c·ε − t.
double SellerCost(double c, const ReportOutcome& outcome);

// `points` evenly spaced reports j·z_max/points, j = 1..points. Zero is left
// out because a report with zero virtual cost makes the buyer's problem
// unbounded.
std::vector<double> MisreportGrid(double z_max, int points = 64);

// max over misreports of COST(truth) − COST(misreport). Positive values mean
// some misreport pays off.
double AuditIc(const ReportedMechanism& mechanism, double c_i,
               const std::vector<double>& misreports);

// COST at the truthful report; individual rationality holds when ≤ 1e−8.
double AuditIr(const ReportedMechanism& mechanism, double c_i);

struct IcAuditReport {
  std::vector<double> ic_violation;  // per seller
  std::vector<double> ir_cost;       // per seller
  std::vector<double> scale;         // c_i·ε_i per seller
  std::vector<double> misreports;

  double max_violation() const;
  double max_ir_cost() const;
  // Largest c_i·ε_i in the market; IC violations are judged against it.
  double instance_scale() const;
};

// Runs AuditIc and AuditIr for every seller of the offline mechanism on `c`.
IcAuditReport AuditOfflineMechanism(const SensitivityProfile& c,
                                    const HyperParams& params,
                                    const SensitivityDistribution& dist,
                                    const QuadratureConfig& q = {},
                                    int misreport_points = 64);

struct PaymentIdentityResult {
  double mean_payments = 0.0;         // E[Σ t_i]
  double mean_virtual_payments = 0.0;  // E[Σ ε_i ψ(c_i)]
  double gap = 0.0;                    // |LHS − RHS| / RHS, 0 when both vanish
  double standard_error = 0.0;         // of the difference of the means
  std::int64_t draws = 0;
};

// Monte-Carlo comparison of expected payments with expected virtual payments
// for the offline mechanism on m sellers drawn from `dist`. Requires at least
// 100 draws.
PaymentIdentityResult PaymentIdentityCheck(const SensitivityDistribution& dist,
                                           const HyperParams& params,
                                           Eigen::Index m, std::int64_t draws,
                                           const RngSpec& rng,
                                           const QuadratureConfig& q = {});

}  // namespace privmarket

#endif  // PRIVMARKET_PAYMENTS_H_
