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

#include "privmarket/bounds.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "privmarket/errors.h"

namespace privmarket {

void BoundConfig::Validate() const {
  if (!(delta > 0.0 && delta < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "delta must lie in (0, 1)");
  }
  if (!(delta_prime > 0.0 && delta_prime < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "delta_prime must lie in (0, 1)");
  }
  if (!(delta + delta_prime < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "delta + delta_prime must be below 1");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    Fail(ErrorCode::kInvalidArgument, "beta must be nonnegative");
  }
  if (n < 1) Fail(ErrorCode::kInvalidArgument, "n must be at least 1");
}

double PoissonTail(double t, int n) {
  if (n < 1) Fail(ErrorCode::kInvalidArgument, "n must be at least 1");
  if (!(t >= 0.0)) Fail(ErrorCode::kInvalidArgument, "t must be nonnegative");
  if (t == 0.0) return 1.0;
  const double half = 0.5 * t;
  const double log_half = std::log(half);
  // log of each term (t/2)^i e^{−t/2} / i!, by the recurrence
  // log term_i = log term_{i−1} + log(t/2) − log i.
  double log_term = -half;
  double log_max = log_term;
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (i > 0) log_term += log_half - std::log(static_cast<double>(i));
    logs.push_back(log_term);
    log_max = std::max(log_max, log_term);
  }
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - log_max);
  return std::min(1.0, std::exp(log_max) * acc);
}

double PoissonTailInverse(double delta_prime, int n) {
  if (!(delta_prime > 0.0 && delta_prime < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "delta_prime must lie in (0, 1)");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (PoissonTail(hi, n) >= delta_prime) {
    lo = hi;
    hi *= 2.0;
  }
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (PoissonTail(mid, n) >= delta_prime) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Return whichever endpoint lands closer to the target.
  return std::abs(PoissonTail(lo, n) - delta_prime) <=
                 std::abs(PoissonTail(hi, n) - delta_prime)
             ? lo
             : hi;
}

double MuConstant(const BoundConfig& cfg) {
  cfg.Validate();
  const double log_inv_delta = -std::log(cfg.delta);
  // ln(1 + e^β) without overflow for large β.
  const double softplus = cfg.beta > 30.0
                              ? cfg.beta + std::log1p(std::exp(-cfg.beta))
                              : std::log1p(std::exp(cfg.beta));
  return 3.0 * log_inv_delta / std::numbers::sqrt2 * softplus +
         cfg.beta / std::numbers::ln2;
}

double SigmaConstant(const BoundConfig& cfg) {
  cfg.Validate();
  const double log_inv_delta = -std::log(cfg.delta);
  return (6.0 * log_inv_delta / std::numbers::sqrt2 + 1.0) *
         (2.0 * cfg.beta * PoissonTailInverse(cfg.delta_prime, cfg.n));
}

double ExcessRisk(const Vector& a, double eta, double mu, double sigma) {
  if (!(eta > 0.0)) Fail(ErrorCode::kInvalidEta, "η must be positive");
  return mu * a.norm() + sigma / eta;
}

ProxyLossTerms ProxyLossBreakdown(const SensitivityProfile& c,
                                  const Vector& epsilon, double mu,
                                  double sigma, double gamma,
                                  const SensitivityDistribution& dist) {
  if (c.size() != epsilon.size()) {
    Fail(ErrorCode::kDimensionMismatch,
         "sensitivity and ε lengths differ: " + std::to_string(c.size()) +
             " vs " + std::to_string(epsilon.size()));
  }
  ProxyLossTerms terms;
  const double eta = epsilon.sum();
  if (!(eta > 0.0)) {
    terms.degenerate = true;
    return terms;
  }
  double payment = 0.0;
  for (Eigen::Index i = 0; i < epsilon.size(); ++i) {
    if (epsilon[i] != 0.0) payment += epsilon[i] * dist.ReportVirtualCost(c[i]);
  }
  terms.norm_term = mu * epsilon.norm() / eta;
  terms.eta_term = sigma / eta;
  terms.payment_term = gamma * payment;
  terms.total = terms.norm_term + terms.eta_term + terms.payment_term;
  return terms;
}

double ProxyLoss(const SensitivityProfile& c, const Vector& epsilon, double mu,
                 double sigma, double gamma,
                 const SensitivityDistribution& dist) {
  return ProxyLossBreakdown(c, epsilon, mu, sigma, gamma, dist).total;
}

double ProxyLossFromVirtualCosts(const Vector& psi, const Vector& epsilon,
                                 double mu, double sigma, double gamma) {
  if (psi.size() != epsilon.size()) {
    Fail(ErrorCode::kDimensionMismatch, "ψ and ε lengths differ");
  }
  const double eta = epsilon.sum();
  if (!(eta > 0.0)) return kInfinity;
  double payment = 0.0;
  for (Eigen::Index i = 0; i < epsilon.size(); ++i) {
    if (epsilon[i] != 0.0) payment += epsilon[i] * psi[i];
  }
  return mu * epsilon.norm() / eta + sigma / eta + gamma * payment;
}

}  // namespace privmarket
