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


#include "privmarket/offline_mechanism.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "privmarket/bounds.h"
#include "privmarket/errors.h"
#include "privmarket/simplex_projection.h"

namespace privmarket {
namespace {

// Count, mean and sum of squared deviations of the active costs, updated one
// cost at a time (Welford). S₁ and S₂ follow from them without the
// cancellation that raw power sums suffer when λ sits close to the costs.
struct ActiveStats {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void Add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }
  double S1(double lambda) const { return count * (lambda - mean); }
  double S2(double lambda) const {
    const double gap = lambda - mean;
    return count * gap * gap + m2;
  }
};

double Residual(double lambda, const ActiveStats& s, double ratio) {
  const double s1 = s.S1(lambda);
  if (!(s1 > 0.0)) return lambda;
  const double s2 = s.S2(lambda);
  return lambda - ratio * s2 - s2 / s1;
}

// dR/dλ using dS₁/dλ = k and dS₂/dλ = 2S₁.
double ResidualSlope(double lambda, const ActiveStats& s, double ratio) {
  const double s1 = s.S1(lambda);
  if (!(s1 > 0.0)) return 0.0;
  const double s2 = s.S2(lambda);
  return -1.0 - 2.0 * ratio * s1 + s.count * s2 / (s1 * s1);
}

// Smallest point right of `from` where R is non-positive, found by doubling
// the step. R tends to −∞ on the last segment, so this terminates.
double ExtendUntilNonPositive(double from, const ActiveStats& s,
                              double ratio) {
  double step = std::max(std::abs(from), 1e-8);
  double hi = from + step;
  for (int it = 0; it < 2100 && Residual(hi, s, ratio) > 0.0; ++it) {
    step *= 2.0;
    hi = from + step;
  }
  return hi;
}

// Maximizer of the concave R on [left, right]; `right` may be +∞.
double SegmentPeak(double left, double right, const ActiveStats& s,
                   double ratio) {
  if (ResidualSlope(left, s, ratio) <= 0.0) return left;
  double lo = left;
  double hi = right;
  if (!std::isfinite(hi)) {
    double step = std::max(std::abs(left), 1e-8);
    hi = left + step;
    while (ResidualSlope(hi, s, ratio) > 0.0 && std::isfinite(step)) {
      lo = hi;
      step *= 2.0;
      hi = left + step;
    }
  } else if (ResidualSlope(hi, s, ratio) >= 0.0) {
    return hi;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (ResidualSlope(mid, s, ratio) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// R(lo) > 0 ≥ R(hi); bisect down to adjacent doubles.
double BisectRoot(double lo, double hi, const ActiveStats& s, double ratio) {
  for (int it = 0; it < 2200; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (Residual(mid, s, ratio) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(Residual(lo, s, ratio)) < std::abs(Residual(hi, s, ratio))
             ? lo
             : hi;
}

Vector VirtualCosts(const SensitivityProfile& c,
                    const SensitivityDistribution& dist) {
  Vector psi(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    psi[i] = dist.ReportVirtualCost(c[i]);
  }
  return psi;
}

double CapFor(const HyperParams& params, Eigen::Index m) {
  return std::min(1.0, params.k / static_cast<double>(m));
}

struct InnerResult {
  Vector a;
  double value = 0.0;
  std::int64_t iterations = 0;
  bool converged = false;
};

// min μ‖a‖ + gᵀa over the capped simplex, starting from `a`. The curvature of
// μ‖a‖ is at most μ/‖a‖ ≤ μ√m on the simplex, so 1/(μ√m) is always a safe
// step. Longer steps are accepted when the gradient change along the step
// stays within 1/step; comparing gradients rather than objective values keeps
// the test meaningful after the objective has converged to rounding level.
InnerResult MinimizeWeights(const Vector& g, double mu, double cap, Vector a,
                            const PgdOptions& options) {
  const double m = static_cast<double>(g.size());
  const double safe_step = 1.0 / (mu * std::sqrt(m));
  auto gradient = [&](const Vector& x) -> Vector {
    return mu * x / x.norm() + g;
  };

  InnerResult result;
  Vector grad = gradient(a);
  double step = safe_step;
  std::int64_t it = 0;
  for (; it < options.max_iterations; ++it) {
    step *= 2.0;
    Vector candidate;
    Vector candidate_grad;
    Vector diff;
    while (true) {
      candidate = ProjectCappedSimplex(a - step * grad, cap);
      diff = candidate - a;
      candidate_grad = gradient(candidate);
      const double curvature = (candidate_grad - grad).dot(diff);
      if (step <= safe_step || curvature * step <= diff.squaredNorm()) break;
      step = std::max(0.5 * step, safe_step);
    }
    const double mapping = diff.norm() / step;
    a = std::move(candidate);
    grad = std::move(candidate_grad);
    if (mapping < options.tolerance) {
      result.converged = true;
      ++it;
      break;
    }
  }
  result.value = mu * a.norm() + g.dot(a);
  result.a = std::move(a);
  result.iterations = it;
  return result;
}

}  // namespace

SolverGrid SolverGrid::ForProblem(Eigen::Index m, double L) {
  if (m < 1) Fail(ErrorCode::kEmptyProfile, "market has no sellers");
  if (!(L > 0.0)) Fail(ErrorCode::kInvalidArgument, "L must be positive");
  SolverGrid grid;
  grid.eta_max = static_cast<double>(m) * L;
  grid.eta_min = 1e-4 * grid.eta_max;
  return grid;
}

void SolverGrid::Validate() const {
  if (!(eta_min > 0.0) || !(eta_min < eta_max) || !std::isfinite(eta_max)) {
    Fail(ErrorCode::kInvalidArgument, "η grid needs 0 < eta_min < eta_max");
  }
  if (points < 2) Fail(ErrorCode::kInvalidArgument, "η grid needs 2 points");
}

std::vector<double> SolverGrid::Values() const {
  Validate();
  std::vector<double> values(static_cast<std::size_t>(points));
  const double log_lo = std::log(eta_min);
  const double log_hi = std::log(eta_max);
  for (int j = 0; j < points; ++j) {
    values[static_cast<std::size_t>(j)] =
        std::exp(log_lo + (log_hi - log_lo) * j / (points - 1));
  }
  values.front() = eta_min;
  values.back() = eta_max;
  return values;
}

double MultiplierResidual(double lambda, const Vector& weighted_costs,
                          double mu, double sigma) {
  double s1 = 0.0;
  double s2 = 0.0;
  for (Eigen::Index i = 0; i < weighted_costs.size(); ++i) {
    const double d = lambda - weighted_costs[i];
    if (d > 0.0) {
      s1 += d;
      s2 += d * d;
    }
  }
  if (!(s1 > 0.0)) return lambda;
  return lambda - sigma / (mu * mu) * s2 - s2 / s1;
}

namespace {

// At a stationary point ε = μ·d/(‖d‖·S₁) with d = (λ − p)⁺, and
// Σ d_i p_i = λS₁ − S₂, so the proxy loss reduces to μλ/√S₂ + σ√S₂/μ.
double StationaryLoss(const MultiplierRoot& root, double mu, double sigma) {
  const double r = std::sqrt(root.s2);
  return mu * root.lambda / r + sigma * r / mu;
}

}  // namespace

MultiplierRoot FindMultiplier(std::span<const double> sorted_costs,
                              std::optional<double> extra_cost, double mu,
                              double sigma,
                              std::vector<RootBracket>* brackets) {
  const double ratio = sigma / (mu * mu);
  // Walk the sorted costs and the extra cost in merged order. Infinite costs
  // never become active.
  std::size_t idx = 0;
  bool extra_pending = extra_cost.has_value() && std::isfinite(*extra_cost);
  auto has_next = [&] {
    return (idx < sorted_costs.size() && std::isfinite(sorted_costs[idx])) ||
           extra_pending;
  };
  auto peek = [&] {
    double v = kInfinity;
    if (idx < sorted_costs.size()) v = sorted_costs[idx];
    if (extra_pending && *extra_cost <= v) v = *extra_cost;
    return v;
  };
  auto pop = [&] {
    const double v = peek();
    if (extra_pending && *extra_cost == v) {
      extra_pending = false;
    } else {
      ++idx;
    }
    return v;
  };

  if (!has_next()) {
    Fail(ErrorCode::kNoInteriorSolution, "no seller has a finite cost");
  }
  ActiveStats stats;
  double left = pop();
  stats.Add(left);
  double left_res = left;
  std::optional<MultiplierRoot> root;
  while (true) {
    while (has_next() && peek() == left) stats.Add(pop());
    const bool last = !has_next();
    const double right = last ? kInfinity : peek();
    const double right_res = last ? -kInfinity : Residual(right, stats, ratio);

    double lo = left;
    bool crossing = false;
    if (left_res > 0.0) {
      crossing = right_res <= 0.0;
      if (brackets != nullptr && crossing) {
        brackets->push_back({left, right});
      }
    } else {
      const double peak = SegmentPeak(left, right, stats, ratio);
      if (Residual(peak, stats, ratio) > 0.0) {
        lo = peak;
        crossing = right_res <= 0.0;
        if (brackets != nullptr) {
          brackets->push_back({left, peak});
          if (crossing) brackets->push_back({peak, right});
        }
      }
    }
    if (crossing) {
      const double hi =
          last ? ExtendUntilNonPositive(lo, stats, ratio) : right;
      if (brackets != nullptr && last) brackets->back().hi = hi;
      const double lambda = BisectRoot(lo, hi, stats, ratio);
      MultiplierRoot found;
      found.lambda = lambda;
      found.s1 = stats.S1(lambda);
      found.s2 = stats.S2(lambda);
      found.residual = std::abs(Residual(lambda, stats, ratio));
      found.active = static_cast<Eigen::Index>(stats.count);
      found.proxy_loss = StationaryLoss(found, mu, sigma);
      if (!root || found.proxy_loss < root->proxy_loss) root = found;
    }
    if (last) break;
    left = pop();
    stats.Add(left);
    left_res = right_res;
  }
  if (!root) {
    Fail(ErrorCode::kNoInteriorSolution,
         "multiplier equation has no positive-to-negative crossing");
  }
  return *root;
}

KktSolution SolveKktWithVirtualCosts(const Vector& psi,
                                     const HyperParams& params) {
  params.Validate();
  const Eigen::Index m = psi.size();
  if (m == 0) Fail(ErrorCode::kEmptyProfile, "market has no sellers");
  const Vector costs = params.gamma * psi;
  std::vector<double> sorted(costs.data(), costs.data() + m);
  std::sort(sorted.begin(), sorted.end());

  KktSolution sol;
  const MultiplierRoot root =
      FindMultiplier(sorted, std::nullopt, params.mu, params.sigma,
                     &sol.brackets);
  sol.lambda = root.lambda;

  Vector d = (sol.lambda - costs.array()).max(0.0).matrix();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!std::isfinite(costs[i])) d[i] = 0.0;
    if (d[i] > 0.0) sol.active_set.push_back(i);
  }
  const double s1 = d.sum();
  const double norm = d.norm();
  sol.epsilon = params.mu * d / (norm * s1);
  sol.cap_binding = d.maxCoeff() / s1 > CapFor(params, m) * (1.0 + 1e-12);
  sol.residual =
      std::abs(MultiplierResidual(sol.lambda, costs, params.mu, params.sigma));
  return sol;
}

KktSolution SolveKkt(const SensitivityProfile& c, const HyperParams& params,
                     const SensitivityDistribution& dist) {
  return SolveKktWithVirtualCosts(VirtualCosts(c, dist), params);
}

PgdSolution SolvePgdWithVirtualCosts(const Vector& psi,
                                     const HyperParams& params,
                                     const SolverGrid& grid,
                                     const PgdOptions& options) {
  params.Validate();
  const Eigen::Index m = psi.size();
  if (m == 0) Fail(ErrorCode::kEmptyProfile, "market has no sellers");
  const double cap = CapFor(params, m);

  // Sellers with infinite virtual cost are pinned at zero weight.
  std::vector<Eigen::Index> finite;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::isfinite(psi[i])) finite.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(finite.size());
  if (n == 0 || cap * static_cast<double>(n) < 1.0 - 1e-12) {
    Fail(ErrorCode::kDegenerateAllocation,
         "too few sellers with finite virtual cost to fill the simplex");
  }
  Vector g0(n);
  for (Eigen::Index j = 0; j < n; ++j) g0[j] = params.gamma * psi[finite[j]];

  PgdSolution best;
  Vector best_a;
  double best_eta = 0.0;
  Vector a = Vector::Constant(n, 1.0 / static_cast<double>(n));
  auto evaluate = [&](double eta, const Vector& start) {
    InnerResult inner =
        MinimizeWeights(eta * g0, params.mu, cap, start, options);
    best.iterations += inner.iterations;
    best.converged = best.converged && inner.converged;
    inner.value += params.sigma / eta;
    return inner;
  };

  const std::vector<double> etas = grid.Values();
  std::size_t best_index = 0;
  double best_value = kInfinity;
  for (std::size_t j = 0; j < etas.size(); ++j) {
    InnerResult inner = evaluate(etas[j], a);
    a = inner.a;
    if (inner.value < best_value) {
      best_value = inner.value;
      best_index = j;
      best_a = std::move(inner.a);
      best_eta = etas[j];
    }
  }
  if (!std::isfinite(best_value)) {
    Fail(ErrorCode::kDegenerateAllocation, "every grid point is degenerate");
  }

  if (options.refine) {
    // Golden-section search on log η between the neighbours of the best grid
    // point.
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = std::log(etas[best_index == 0 ? 0 : best_index - 1]);
    double hi = std::log(etas[std::min(best_index + 1, etas.size() - 1)]);
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    InnerResult r1 = evaluate(std::exp(x1), best_a);
    InnerResult r2 = evaluate(std::exp(x2), best_a);
    for (int it = 0; it < 100 && hi - lo > 1e-13; ++it) {
      if (r1.value <= r2.value) {
        hi = x2;
        x2 = x1;
        r2 = std::move(r1);
        x1 = hi - invphi * (hi - lo);
        r1 = evaluate(std::exp(x1), r2.a);
      } else {
        lo = x1;
        x1 = x2;
        r1 = std::move(r2);
        x2 = lo + invphi * (hi - lo);
        r2 = evaluate(std::exp(x2), r1.a);
      }
    }
    InnerResult& winner = r1.value <= r2.value ? r1 : r2;
    const double winner_eta = std::exp(r1.value <= r2.value ? x1 : x2);
    if (winner.value < best_value) {
      best_value = winner.value;
      best_a = std::move(winner.a);
      best_eta = winner_eta;
    }
  }

  Vector full = Vector::Zero(m);
  for (Eigen::Index j = 0; j < n; ++j) full[finite[j]] = best_a[j];
  best.allocation = PrivacyAllocation::FromWeights(full, best_eta);
  best.proxy_loss = ProxyLossFromVirtualCosts(psi, best.allocation.epsilon,
                                              params.mu, params.sigma,
                                              params.gamma);
  return best;
}

PgdSolution SolvePgd(const SensitivityProfile& c, const HyperParams& params,
                     const SensitivityDistribution& dist,
                     const SolverGrid& grid, const PgdOptions& options) {
  return SolvePgdWithVirtualCosts(VirtualCosts(c, dist), params, grid,
                                  options);
}

AllocationSolve SolveAllocation(const SensitivityProfile& c,
                                const HyperParams& params,
                                const SensitivityDistribution& dist,
                                const OfflineOptions& options) {
  const Vector psi = VirtualCosts(c, dist);
  KktSolution kkt = SolveKktWithVirtualCosts(psi, params);
  AllocationSolve solve;
  solve.brackets = std::move(kkt.brackets);
  if (!kkt.cap_binding) {
    solve.allocation = PrivacyAllocation::FromEpsilon(kkt.epsilon);
    solve.lambda = kkt.lambda;
    solve.solver = "kkt";
  } else {
    const SolverGrid grid =
        options.grid.value_or(SolverGrid::ForProblem(c.size(), params.L));
    PgdSolution pgd = SolvePgdWithVirtualCosts(psi, params, grid, options.pgd);
    solve.allocation = std::move(pgd.allocation);
    solve.iterations = pgd.iterations;
    solve.solver = "pgd";
    solve.cap_binding = true;
  }
  solve.proxy_loss =
      ProxyLossFromVirtualCosts(psi, solve.allocation.epsilon, params.mu,
                                params.sigma, params.gamma);
  return solve;
}

ReportResponse::ReportResponse(const SensitivityProfile& c, Eigen::Index i,
                               const HyperParams& params,
                               const SensitivityDistribution& dist,
                               const OfflineOptions& options)
    : c_(c), i_(i), params_(params), dist_(&dist), options_(options) {
  if (i < 0 || i >= c.size()) {
    Fail(ErrorCode::kInvalidArgument, "seller index out of range");
  }
  params.Validate();
  others_.reserve(static_cast<std::size_t>(c.size() - 1));
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (j != i) others_.push_back(params.gamma * dist.ReportVirtualCost(c[j]));
  }
  std::sort(others_.begin(), others_.end());
}

double ReportResponse::operator()(double z) const {
  if (!(z >= 0.0)) Fail(ErrorCode::kInvalidArgument, "reports must be >= 0");
  const double cost = params_.gamma * dist_->ReportVirtualCost(z);
  const MultiplierRoot root =
      FindMultiplier(others_, cost, params_.mu, params_.sigma);
  const double d = root.lambda - cost;
  if (!(d > 0.0)) return 0.0;
  double lowest = cost;
  if (!others_.empty()) lowest = std::min(lowest, others_.front());
  const double largest_weight = (root.lambda - lowest) / root.s1;
  if (largest_weight > CapFor(params_, c_.size()) * (1.0 + 1e-12)) {
    ++fallbacks_;
    const AllocationSolve solve =
        SolveAllocation(c_.WithReport(i_, z), params_, *dist_, options_);
    return solve.allocation.epsilon[i_];
  }
  return params_.mu * d / (std::sqrt(root.s2) * root.s1);
}

double ReportResponse::Cutoff() const {
  if (others_.empty() || !std::isfinite(others_.front())) return kInfinity;
  double lambda = 0.0;
  try {
    lambda = FindMultiplier(others_, std::nullopt, params_.mu, params_.sigma)
                 .lambda;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoInteriorSolution) throw;
    return kInfinity;
  }
  // Below ψ⁻¹(λ₋ᵢ/γ) seller i always improves on the market without them.
  // Above it a stationary point that includes i can still win, so ε_i may
  // stay positive for a while and then drop to zero in a jump. ε_i is
  // non-increasing in the report, so the jump is located by bisection.
  double lo = dist_->InverseVirtualCost(lambda / params_.gamma);
  if ((*this)(lo) == 0.0) return lo;
  double hi = std::max(2.0 * lo, 1e-12);
  for (int i = 0; (*this)(hi) > 0.0; ++i) {
    if (i == 1100) return kInfinity;
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-15 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if ((*this)(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

double EpsilonOfReport(const SensitivityProfile& c, Eigen::Index i, double z,
                       const HyperParams& params,
                       const SensitivityDistribution& dist) {
  return ReportResponse(c, i, params, dist)(z);
}

PaymentSchedule OfflinePayments(const SensitivityProfile& c,
                                const HyperParams& params,
                                const SensitivityDistribution& dist,
                                const AllocationSolve& solve,
                                const OfflineOptions& options) {
  QuadratureConfig q = options.quadrature;
  q.z_max = std::min(q.z_max, dist.support_high());
  PaymentSchedule schedule;
  schedule.t = Vector::Zero(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    // A monotone allocation that is already zero at the truthful report stays
    // zero above it.
    if (solve.allocation.epsilon[i] == 0.0) continue;
    const ReportResponse response(c, i, params, dist, options);
    const double hint = solve.cap_binding ? kInfinity : response.Cutoff();
    schedule.t[i] = PaymentForSeller(response, c[i], q, hint);
  }
  return schedule;
}

MechanismOutcome RunOfflineMechanism(const Dataset& data,
                                     const SensitivityProfile& c,
                                     const HyperParams& params,
                                     const SensitivityDistribution& dist,
                                     const RngSpec& rng,
                                     const OfflineOptions& options) {
  if (c.size() != data.rows()) {
    Fail(ErrorCode::kDimensionMismatch,
         "expected " + std::to_string(data.rows()) + " sensitivities, got " +
             std::to_string(c.size()));
  }
  params.Validate();
  const Eigen::Index m = data.rows();
  MechanismOutcome outcome;
  Diagnostics& diag = outcome.diagnostics;
  diag.seed = rng.seed();
  diag.delta = PrivacySlack(params.k, m, params.lambda_reg);
  diag.effective_k = params.k;

  AllocationSolve solve;
  try {
    solve = SolveAllocation(c, params, dist, options);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoInteriorSolution &&
        e.code() != ErrorCode::kDegenerateAllocation) {
      throw;
    }
    outcome.allocation.a = Vector::Zero(m);
    outcome.allocation.epsilon = Vector::Zero(m);
    outcome.allocation.eta = 0.0;
    outcome.payments.t = Vector::Zero(m);
    outcome.weights = ModelWeights(Vector::Zero(data.dims()));
    diag.degenerate = true;
    diag.solver = "none";
    return outcome;
  }

  outcome.payments = OfflinePayments(c, params, dist, solve, options);
  const FitReport fit =
      Fit(data, solve.allocation, params.lambda_reg, rng, options.fit);
  outcome.weights = fit.weights;
  outcome.allocation = std::move(solve.allocation);
  diag.lambda = solve.lambda;
  diag.proxy_loss = solve.proxy_loss;
  diag.solver = solve.solver;
  diag.cap_binding = solve.cap_binding;
  diag.allocation_iterations = solve.iterations;
  diag.fit_iterations = fit.iterations;
  diag.root_brackets = std::move(solve.brackets);
  return outcome;
}

}  // namespace privmarket
