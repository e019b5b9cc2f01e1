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


#include "privmarket/online_mechanism.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include "privmarket/bounds.h"
#include "privmarket/errors.h"

namespace privmarket {

void OnlineConfig::Validate() const {
  if (m_planned < 1) {
    Fail(ErrorCode::kInvalidArgument, "m_planned must be at least 1");
  }
  if (!(xi > 0.0 && xi <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "xi must lie in (0, 1]");
  }
  if (!std::isnan(density_at_zero) &&
      !(density_at_zero > 0.0 && std::isfinite(density_at_zero))) {
    Fail(ErrorCode::kInvalidArgument, "density_at_zero must be positive");
  }
}

double OnlineConfig::ResolveDensity(const SensitivityDistribution& dist) const {
  Validate();
  if (!std::isnan(density_at_zero)) return density_at_zero;
  const double f = dist.VirtualCostDensityAtInfimum();
  if (!(f > 0.0) || !std::isfinite(f)) {
    Fail(ErrorCode::kDegeneratePdf,
         "virtual-cost density vanishes at its infimum; set density_at_zero");
  }
  return f;
}

double CutoffPrice(const HyperParams& params, const OnlineConfig& cfg,
                   const SensitivityDistribution& dist) {
  params.Validate();
  const double f = cfg.ResolveDensity(dist);
  const double m = static_cast<double>(cfg.m_planned);
  return std::sqrt(params.mu * params.mu * params.gamma /
                   (params.sigma * m * f));
}

namespace {

// ε̃ = slope·(λ̃ − γψ) with the constant factor precomputed.
struct OnlineRule {
  double cutoff = 0.0;
  double slope = 0.0;

  OnlineRule(const HyperParams& params, const OnlineConfig& cfg,
             const SensitivityDistribution& dist) {
    const double f = cfg.ResolveDensity(dist);
    const double m = static_cast<double>(cfg.m_planned);
    cutoff = CutoffPrice(params, cfg, dist);
    slope = 2.0 * std::sqrt(3.0) * std::pow(params.gamma, 1.5) * params.mu /
            (std::pow(f, 1.5) * std::pow(m, 1.5) * std::pow(cutoff, 3.5));
  }

  double operator()(double weighted_cost) const {
    return weighted_cost < cutoff ? slope * (cutoff - weighted_cost) : 0.0;
  }
};

}  // namespace

double OnlineEpsilon(double c_i, const HyperParams& params,
                     const OnlineConfig& cfg,
                     const SensitivityDistribution& dist) {
  if (!(c_i >= 0.0)) Fail(ErrorCode::kInvalidArgument, "c_i must be >= 0");
  const OnlineRule rule(params, cfg, dist);
  return rule(params.gamma * dist.ReportVirtualCost(c_i));
}

double OnlineCutoffReport(const HyperParams& params, const OnlineConfig& cfg,
                          const SensitivityDistribution& dist) {
  return dist.InverseVirtualCost(CutoffPrice(params, cfg, dist) /
                                 params.gamma);
}

double OnlinePayment(double c_i, const HyperParams& params,
                     const OnlineConfig& cfg,
                     const SensitivityDistribution& dist,
                     const QuadratureConfig& q) {
  if (!(c_i >= 0.0)) Fail(ErrorCode::kInvalidArgument, "c_i must be >= 0");
  const OnlineRule rule(params, cfg, dist);
  const AllocationRule eps = [&](double z) {
    return rule(params.gamma * dist.ReportVirtualCost(z));
  };
  QuadratureConfig bounded = q;
  bounded.z_max = std::min(q.z_max, dist.support_high());
  return PaymentForSeller(eps, c_i, bounded,
                          OnlineCutoffReport(params, cfg, dist));
}

double OnlinePaymentUniformClosedForm(double c_i, const HyperParams& params,
                                      const OnlineConfig& cfg,
                                      const SensitivityDistribution& dist) {
  const auto* uniform = std::get_if<UniformFamily>(&dist.family());
  if (uniform == nullptr) {
    Fail(ErrorCode::kInvalidDistribution,
         "closed-form online payment needs uniform sensitivities");
  }
  const OnlineRule rule(params, cfg, dist);
  const double a = uniform->low;
  const double g = params.gamma;
  // On the support ψ(z) = 2z − a, so ε̃(z) = K(λ̃ + γa − 2γz).
  const double upper = std::min((rule.cutoff / g + a) / 2.0, uniform->high);
  const double eps_c = rule(g * dist.ReportVirtualCost(c_i));
  if (!(upper > c_i)) return c_i * eps_c;
  const double integral =
      rule.slope * ((rule.cutoff + g * a) * (upper - c_i) -
                    g * (upper * upper - c_i * c_i));
  return c_i * eps_c + integral;
}

SellerDecision DecideSeller(double c_i, const HyperParams& params,
                            const OnlineConfig& cfg,
                            const SensitivityDistribution& dist,
                            const QuadratureConfig& q) {
  SellerDecision decision;
  decision.epsilon = OnlineEpsilon(c_i, params, cfg, dist);
  decision.accepted = decision.epsilon > 0.0;
  if (decision.accepted) {
    decision.payment = OnlinePayment(c_i, params, cfg, dist, q);
  }
  return decision;
}

std::vector<SellerDecision> DecideStream(const SensitivityProfile& stream,
                                         const HyperParams& params,
                                         const OnlineConfig& cfg,
                                         const SensitivityDistribution& dist,
                                         const QuadratureConfig& q) {
  if (stream.size() > cfg.m_planned) {
    Fail(ErrorCode::kInvalidArgument,
         "stream has " + std::to_string(stream.size()) +
             " sellers but only " + std::to_string(cfg.m_planned) +
             " were planned");
  }
  std::vector<SellerDecision> decisions;
  decisions.reserve(static_cast<std::size_t>(stream.size()));
  for (Eigen::Index i = 0; i < stream.size(); ++i) {
    decisions.push_back(DecideSeller(stream[i], params, cfg, dist, q));
  }
  return decisions;
}

Vector OnlineAllocation(const SensitivityProfile& stream,
                        const HyperParams& params, const OnlineConfig& cfg,
                        const SensitivityDistribution& dist) {
  const OnlineRule rule(params, cfg, dist);
  Vector eps(stream.size());
  for (Eigen::Index i = 0; i < stream.size(); ++i) {
    eps[i] = rule(params.gamma * dist.ReportVirtualCost(stream[i]));
  }
  return eps;
}

MechanismOutcome RunOnlineMechanism(const Dataset& data,
                                    const SensitivityProfile& stream,
                                    const HyperParams& params,
                                    const OnlineConfig& cfg,
                                    const SensitivityDistribution& dist,
                                    const RngSpec& rng,
                                    const OnlineOptions& options) {
  if (stream.size() != data.rows()) {
    Fail(ErrorCode::kDimensionMismatch,
         "expected " + std::to_string(data.rows()) + " sensitivities, got " +
             std::to_string(stream.size()));
  }
  const std::vector<SellerDecision> decisions =
      DecideStream(stream, params, cfg, dist, options.quadrature);
  const Eigen::Index m = stream.size();

  MechanismOutcome outcome;
  Diagnostics& diag = outcome.diagnostics;
  diag.seed = rng.seed();
  diag.solver = "online";
  diag.lambda = CutoffPrice(params, cfg, dist);
  Vector eps(m);
  outcome.payments.t = Vector(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    eps[i] = decisions[static_cast<std::size_t>(i)].epsilon;
    outcome.payments.t[i] = decisions[static_cast<std::size_t>(i)].payment;
  }

  if (!(eps.sum() > 0.0)) {
    outcome.allocation.a = Vector::Zero(m);
    outcome.allocation.epsilon = eps;
    outcome.allocation.eta = 0.0;
    outcome.weights = ModelWeights(Vector::Zero(data.dims()));
    diag.degenerate = true;
    diag.effective_k = params.k;
    diag.delta = PrivacySlack(params.k, m, params.lambda_reg);
    return outcome;
  }

  outcome.allocation = PrivacyAllocation::FromEpsilon(eps);
  // No cap is imposed on arrival, so the feasibility check is widened to the
  // largest realized weight.
  const double realized_k =
      outcome.allocation.a.maxCoeff() * static_cast<double>(m);
  diag.effective_k = std::max(params.k, realized_k);
  diag.cap_binding = realized_k > params.k;
  diag.delta = PrivacySlack(diag.effective_k, m, params.lambda_reg);
  diag.proxy_loss = ProxyLoss(stream, eps, params.mu, params.sigma,
                              params.gamma, dist);

  const FitReport fit = Fit(data, outcome.allocation, params.lambda_reg, rng,
                            options.fit);
  outcome.weights = fit.weights;
  diag.fit_iterations = fit.iterations;
  return outcome;
}

}  // namespace privmarket
