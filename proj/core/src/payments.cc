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


#include "privmarket/payments.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "privmarket/errors.h"
#include "privmarket/offline_mechanism.h"

namespace privmarket {
namespace {

constexpr double kMonotoneSlack = 1e-9;

struct Trapezoid {
  double integral = 0.0;
  std::int64_t evaluations = 0;
};

// Composite trapezoid of eps on [lo, hi] with `points` nodes, auditing that
// eps never rises between consecutive nodes.
Trapezoid Integrate(const AllocationRule& eps, double lo, double hi,
                    int points, double eps_at_lo) {
  Trapezoid out;
  if (!(hi > lo)) return out;
  const double h = (hi - lo) / (points - 1);
  double prev = eps_at_lo;
  double sum = 0.5 * prev;
  for (int j = 1; j < points; ++j) {
    const double z = j == points - 1 ? hi : lo + h * j;
    const double value = eps(z);
    ++out.evaluations;
    if (value > prev + kMonotoneSlack * std::max(1.0, std::abs(prev))) {
      std::ostringstream msg;
      msg << "allocation rises from " << prev << " to " << value
          << " at report " << z;
      Fail(ErrorCode::kNonMonotoneAllocation, msg.str());
    }
    sum += j == points - 1 ? 0.5 * value : value;
    prev = value;
  }
  out.integral = sum * h;
  return out;
}

// Locates the report where eps first falls below `tol`, searching right of
// `from` (where eps ≥ tol) up to `ceiling`.
double DetectCutoff(const AllocationRule& eps, double from, double ceiling,
                    double tol, std::int64_t& evaluations) {
  double lo = from;
  double step = std::max(from, 1.0);
  double hi = std::min(from + step, ceiling);
  while (true) {
    ++evaluations;
    if (eps(hi) < tol) break;
    if (hi >= ceiling) return ceiling;
    lo = hi;
    step *= 2.0;
    hi = std::min(from + step, ceiling);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    ++evaluations;
    if (eps(mid) < tol) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace

void QuadratureConfig::Validate() const {
  if (grid_points < 8) {
    Fail(ErrorCode::kInvalidArgument, "quadrature needs at least 8 points");
  }
  if (!(tolerance >= 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "tolerance must be nonnegative");
  }
  if (policy == UpperLimitPolicy::kFixed && !std::isfinite(z_max)) {
    Fail(ErrorCode::kInvalidArgument, "fixed policy needs a finite z_max");
  }
  if (!(z_max > 0.0)) Fail(ErrorCode::kInvalidArgument, "z_max must be > 0");
}

PaymentReport ComputePayment(const AllocationRule& eps, double c_i,
                             const QuadratureConfig& q, double cutoff_hint) {
  q.Validate();
  if (!(c_i >= 0.0)) Fail(ErrorCode::kInvalidArgument, "c_i must be >= 0");
  PaymentReport report;
  report.epsilon_at_report = eps(c_i);
  report.evaluations = 1;
  if (q.policy == UpperLimitPolicy::kCutoffDetect &&
      report.epsilon_at_report < q.tolerance) {
    report.upper_limit = c_i;
    return report;
  }

  double upper = q.z_max;
  if (q.policy == UpperLimitPolicy::kCutoffDetect) {
    upper = std::min(cutoff_hint, q.z_max);
    const double accept =
        std::max(q.tolerance, 1e-6 * report.epsilon_at_report);
    bool trusted = false;
    if (std::isfinite(upper) && upper >= c_i) {
      ++report.evaluations;
      trusted = upper >= q.z_max || eps(upper) < accept;
    }
    if (!trusted) {
      upper = DetectCutoff(eps, std::max(c_i, std::isfinite(upper) ? upper : c_i),
                           q.z_max, q.tolerance, report.evaluations);
    }
  }
  upper = std::max(upper, c_i);
  report.upper_limit = upper;

  const Trapezoid base =
      Integrate(eps, c_i, upper, q.grid_points, report.epsilon_at_report);
  report.evaluations += base.evaluations;
  report.payment = c_i * report.epsilon_at_report + base.integral;
  if (q.self_check) {
    const Trapezoid fine = Integrate(eps, c_i, upper, 2 * q.grid_points - 1,
                                     report.epsilon_at_report);
    report.evaluations += fine.evaluations;
    const double refined = c_i * report.epsilon_at_report + fine.integral;
    report.self_check_change =
        report.payment > 0.0 ? std::abs(refined - report.payment) / report.payment
                             : std::abs(refined);
  }
  return report;
}

double PaymentForSeller(const AllocationRule& eps, double c_i,
                        const QuadratureConfig& q, double cutoff_hint) {
  return ComputePayment(eps, c_i, q, cutoff_hint).payment;
}

double SellerCost(double c, const ReportOutcome& outcome) {
  return c * outcome.epsilon - outcome.payment;
}

std::vector<double> MisreportGrid(double z_max, int points) {
  if (!(z_max > 0.0) || !std::isfinite(z_max)) {
    Fail(ErrorCode::kInvalidArgument, "misreport range must be finite");
  }
  if (points < 1) Fail(ErrorCode::kInvalidArgument, "need misreport points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int j = 1; j <= points; ++j) {
    grid[static_cast<std::size_t>(j - 1)] = z_max * j / points;
  }
  return grid;
}

double AuditIc(const ReportedMechanism& mechanism, double c_i,
               const std::vector<double>& misreports) {
  const double truthful = SellerCost(c_i, mechanism(c_i));
  double worst = -kInfinity;
  for (double z : misreports) {
    worst = std::max(worst, truthful - SellerCost(c_i, mechanism(z)));
  }
  return worst;
}

double AuditIr(const ReportedMechanism& mechanism, double c_i) {
  return SellerCost(c_i, mechanism(c_i));
}

double IcAuditReport::max_violation() const {
  double worst = -kInfinity;
  for (double v : ic_violation) worst = std::max(worst, v);
  return worst;
}

double IcAuditReport::max_ir_cost() const {
  double worst = -kInfinity;
  for (double v : ir_cost) worst = std::max(worst, v);
  return worst;
}

double IcAuditReport::instance_scale() const {
  double largest = 0.0;
  for (double v : scale) largest = std::max(largest, v);
  return largest;
}

IcAuditReport AuditOfflineMechanism(const SensitivityProfile& c,
                                    const HyperParams& params,
                                    const SensitivityDistribution& dist,
                                    const QuadratureConfig& q,
                                    int misreport_points) {
  OfflineOptions options;
  options.quadrature = q;
  options.quadrature.z_max = std::min(q.z_max, dist.support_high());
  const AllocationSolve base = SolveAllocation(c, params, dist, options);

  IcAuditReport report;
  double z_max = options.quadrature.z_max;
  std::vector<ReportResponse> responses;
  std::vector<double> cutoffs;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    responses.emplace_back(c, i, params, dist, options);
    cutoffs.push_back(base.cap_binding ? kInfinity : responses.back().Cutoff());
  }
  if (!std::isfinite(z_max)) {
    z_max = 0.0;
    for (double cut : cutoffs) {
      if (std::isfinite(cut)) z_max = std::max(z_max, cut);
    }
    for (Eigen::Index i = 0; i < c.size(); ++i) z_max = std::max(z_max, c[i]);
    z_max *= 1.5;
  }
  report.misreports = MisreportGrid(z_max, misreport_points);

  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const ReportResponse& response = responses[static_cast<std::size_t>(i)];
    const double cutoff = cutoffs[static_cast<std::size_t>(i)];
    const ReportedMechanism mechanism = [&](double z) {
      ReportOutcome out;
      const PaymentReport pay =
          ComputePayment(response, z, options.quadrature, cutoff);
      out.epsilon = pay.epsilon_at_report;
      out.payment = pay.payment;
      return out;
    };
    report.ic_violation.push_back(AuditIc(mechanism, c[i], report.misreports));
    report.ir_cost.push_back(AuditIr(mechanism, c[i]));
    report.scale.push_back(c[i] * base.allocation.epsilon[i]);
  }
  return report;
}

PaymentIdentityResult PaymentIdentityCheck(const SensitivityDistribution& dist,
                                           const HyperParams& params,
                                           Eigen::Index m, std::int64_t draws,
                                           const RngSpec& rng,
                                           const QuadratureConfig& q) {
  if (draws < 100) {
    Fail(ErrorCode::kInvalidArgument, "payment identity needs >= 100 draws");
  }
  OfflineOptions options;
  options.quadrature = q;
  double sum_diff = 0.0;
  double sum_diff_sq = 0.0;
  double sum_lhs = 0.0;
  double sum_rhs = 0.0;
  for (std::int64_t d = 0; d < draws; ++d) {
    const SensitivityProfile c = SampleSensitivities(
        dist, m, rng.Derive(kSensitivityStream, static_cast<std::uint64_t>(d)));
    AllocationSolve solve;
    try {
      solve = SolveAllocation(c, params, dist, options);
    } catch (const Error& e) {
      // A market that buys nothing pays nothing and owes nothing.
      if (e.code() != ErrorCode::kNoInteriorSolution &&
          e.code() != ErrorCode::kDegenerateAllocation) {
        throw;
      }
      continue;
    }
    const PaymentSchedule t = OfflinePayments(c, params, dist, solve, options);
    double virtual_payment = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double e = solve.allocation.epsilon[i];
      if (e != 0.0) virtual_payment += e * dist.ReportVirtualCost(c[i]);
    }
    const double lhs = t.total();
    sum_lhs += lhs;
    sum_rhs += virtual_payment;
    sum_diff += lhs - virtual_payment;
    sum_diff_sq += (lhs - virtual_payment) * (lhs - virtual_payment);
  }
  PaymentIdentityResult result;
  const double n = static_cast<double>(draws);
  result.draws = draws;
  result.mean_payments = sum_lhs / n;
  result.mean_virtual_payments = sum_rhs / n;
  const double mean_diff = sum_diff / n;
  const double var = std::max(0.0, sum_diff_sq / n - mean_diff * mean_diff);
  result.standard_error = std::sqrt(var / (n - 1.0));
  if (result.mean_virtual_payments == 0.0) {
    result.gap = result.mean_payments == 0.0 ? 0.0 : kInfinity;
  } else {
    result.gap = std::abs(result.mean_payments - result.mean_virtual_payments) /
                 std::abs(result.mean_virtual_payments);
  }
  return result;
}

}  // namespace privmarket
