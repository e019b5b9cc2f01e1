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


#include "privmarket/joint_optimizer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

#include "privmarket/bounds.h"
#include "privmarket/errors.h"
#include "privmarket/simplex_projection.h"

namespace privmarket {
namespace {

double EtaOf(const JointProblem& problem, double eps_avg) {
  return static_cast<double>(problem.m()) * eps_avg;
}

Vector ScaledNoise(const JointProblem& problem, double eta) {
  if (problem.noise.raw_norm == 0.0) {
    return Vector::Zero(problem.data->dims());
  }
  return problem.noise.ScaledFor(eta);
}

void CheckPoint(const JointProblem& problem, const Vector& w, const Vector& a) {
  if (w.size() != problem.data->dims() || a.size() != problem.m()) {
    Fail(ErrorCode::kDimensionMismatch, "joint point has the wrong shape");
  }
}

double Value(const JointProblem& problem, const Vector& w, const Vector& a,
             double eta, const Vector& b_prime) {
  const Dataset& data = *problem.data;
  const HyperParams& p = problem.params;
  const Vector margins = (data.features() * w).cwiseProduct(data.labels());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    loss += a[i] * LogisticLoss(margins[i]);
  }
  return loss + b_prime.dot(w) + 0.5 * p.lambda_reg * w.squaredNorm() +
         p.mu * a.squaredNorm() + p.sigma / eta +
         p.gamma * eta * a.dot(problem.psi);
}

JointGradient Gradient(const JointProblem& problem, const Vector& w,
                       const Vector& a, double eta, const Vector& b_prime) {
  const Dataset& data = *problem.data;
  const HyperParams& p = problem.params;
  const Vector margins = (data.features() * w).cwiseProduct(data.labels());
  Vector coeff(margins.size());
  JointGradient g;
  g.a.resize(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    coeff[i] = a[i] * LogisticLossSlope(margins[i]) * data.labels()[i];
    g.a[i] = LogisticLoss(margins[i]);
  }
  g.w = data.features().transpose() * coeff + b_prime + p.lambda_reg * w;
  g.a += 2.0 * p.mu * a + p.gamma * eta * problem.psi;
  return g;
}

}  // namespace

JointProblem::JointProblem(const Dataset& data, const SensitivityProfile& c,
                           const HyperParams& params,
                           const SensitivityDistribution& dist,
                           NoiseVector noise)
    : data(&data), params(params), noise(std::move(noise)) {
  params.Validate(/*allow_zero_weights=*/true);
  if (c.size() != data.rows()) {
    Fail(ErrorCode::kDimensionMismatch,
         "expected " + std::to_string(data.rows()) + " sensitivities, got " +
             std::to_string(c.size()));
  }
  psi.resize(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    psi[i] = dist.ReportVirtualCost(c[i]);
  }
  if (!psi.allFinite()) {
    Fail(ErrorCode::kInvalidArgument, "virtual costs must be finite");
  }
}

double JointProblem::cap() const {
  return std::min(1.0, params.k / static_cast<double>(m()));
}

double JointObjective(const JointProblem& problem, const Vector& w,
                      const Vector& a, double eps_avg) {
  CheckPoint(problem, w, a);
  if (!(eps_avg > 0.0)) return kInfinity;
  const double eta = EtaOf(problem, eps_avg);
  return Value(problem, w, a, eta, ScaledNoise(problem, eta));
}

JointGradient JointObjectiveGradient(const JointProblem& problem,
                                     const Vector& w, const Vector& a,
                                     double eps_avg) {
  CheckPoint(problem, w, a);
  if (!(eps_avg > 0.0)) Fail(ErrorCode::kInvalidEta, "eps_avg must be > 0");
  const double eta = EtaOf(problem, eps_avg);
  return Gradient(problem, w, a, eta, ScaledNoise(problem, eta));
}

double ConvexityMargin(const HyperParams& params, Eigen::Index m) {
  return 2.0 * params.lambda_reg * params.mu - static_cast<double>(m);
}

std::vector<double> EpsAvgGrid(double L, int points) {
  if (!(L > 0.0)) Fail(ErrorCode::kInvalidArgument, "L must be positive");
  if (points < 2) Fail(ErrorCode::kInvalidArgument, "need 2 grid points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double lo = std::log(1e-4 * L);
  const double hi = std::log(L);
  for (int j = 0; j < points; ++j) {
    grid[static_cast<std::size_t>(j)] =
        std::exp(lo + (hi - lo) * j / (points - 1));
  }
  grid.back() = L;
  return grid;
}

JointSolution MinimizeJoint(const JointProblem& problem, double eps_avg,
                            Vector w, Vector a, const JointOptions& options,
                            std::vector<double>* trace) {
  CheckPoint(problem, w, a);
  if (!(eps_avg > 0.0)) Fail(ErrorCode::kInvalidEta, "eps_avg must be > 0");
  const double eta = EtaOf(problem, eps_avg);
  const Vector b_prime = ScaledNoise(problem, eta);
  const double cap = problem.cap();
  a = ProjectCappedSimplex(a, cap);

  double value = Value(problem, w, a, eta, b_prime);
  JointGradient grad = Gradient(problem, w, a, eta, b_prime);
  if (trace != nullptr) trace->push_back(value);

  // Gradients scale with the noise term ‖b′‖ ∝ 1/η, and so does the rounding
  // error of the objective, so the stopping rule is relative to it.
  const double tolerance = options.tolerance * std::max(1.0, b_prime.norm());
  JointSolution sol;
  std::int64_t it = 0;
  for (; it < options.max_iterations; ++it) {
    double alpha = 1.0;
    Vector w_next;
    Vector a_next;
    double next_value = 0.0;
    JointGradient next_grad;
    double step_sq = 0.0;
    while (true) {
      w_next = w - alpha * grad.w;
      a_next = ProjectCappedSimplex(a - alpha * grad.a, cap);
      const double dw_sq = (w_next - w).squaredNorm();
      const double da_sq = (a_next - a).squaredNorm();
      step_sq = dw_sq + da_sq;
      next_value = Value(problem, w_next, a_next, eta, b_prime);
      if (next_value <= value - 1e-4 * step_sq / alpha) {
        next_grad = Gradient(problem, w_next, a_next, eta, b_prime);
        break;
      }
      // Once the decrease is below rounding, fall back to checking that the
      // gradient change along the step is consistent with 1/α.
      if (std::abs(next_value - value) <= 1e-12 * std::max(1.0, std::abs(value))) {
        next_grad = Gradient(problem, w_next, a_next, eta, b_prime);
        const double curvature = (next_grad.w - grad.w).dot(w_next - w) +
                                 (next_grad.a - grad.a).dot(a_next - a);
        if (curvature * alpha <= step_sq) break;
      }
      alpha *= 0.5;
      if (alpha < 1e-30) {
        next_grad = Gradient(problem, w_next, a_next, eta, b_prime);
        break;
      }
    }
    const double mapping = std::sqrt(step_sq) / alpha;
    w = std::move(w_next);
    a = std::move(a_next);
    value = next_value;
    grad = std::move(next_grad);
    if (trace != nullptr) trace->push_back(value);
    if (mapping < tolerance) {
      sol.converged = true;
      ++it;
      break;
    }
  }
  sol.weights = ModelWeights(std::move(w));
  sol.a = std::move(a);
  sol.eps_avg = eps_avg;
  sol.eta = eta;
  sol.objective = value;
  sol.selection_score = value - b_prime.dot(sol.weights.w());
  sol.iterations = it;
  sol.convexity_margin = ConvexityMargin(problem.params, problem.m());
  sol.noise = problem.noise;
  return sol;
}

void JointStartingPoint(const JointProblem& problem, JointInit init,
                        const RngSpec& rng, std::uint64_t init_index,
                        Vector& w, Vector& a) {
  const Eigen::Index n = problem.data->dims();
  const Eigen::Index m = problem.m();
  if (init == JointInit::kZero) {
    w = Vector::Zero(n);
    a = Vector::Constant(m, 1.0 / static_cast<double>(m));
    return;
  }
  Engine engine = rng.Stream(kInitStream, init_index);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  w.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) w[j] = normal(engine);
  a.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) a[i] = uniform(engine);
  a = ProjectCappedSimplex(a / a.sum(), problem.cap());
}

JointSolution FitJoint(const Dataset& data, const SensitivityProfile& c,
                       const HyperParams& params,
                       const SensitivityDistribution& dist, const RngSpec& rng,
                       const JointOptions& options) {
  const JointProblem problem(data, c, params, dist,
                             SampleNoise(data.dims(), 1.0, rng));
  std::vector<std::string> warnings;
  const double margin = ConvexityMargin(params, data.rows());
  if (margin <= 0.0) {
    std::ostringstream msg;
    msg << "2Λμ − m = " << margin
        << " is not positive; the joint objective may be nonconvex";
    warnings.push_back(msg.str());
  }
  Vector w;
  Vector a;
  JointStartingPoint(problem, options.init, rng, options.init_index, w, a);

  JointSolution best;
  std::int64_t total_iterations = 0;
  bool all_converged = true;
  for (double eps_avg : EpsAvgGrid(params.L, options.grid_points)) {
    JointSolution sol = MinimizeJoint(problem, eps_avg, w, a, options);
    total_iterations += sol.iterations;
    if (!sol.converged) {
      all_converged = false;
      std::ostringstream msg;
      msg << "no convergence at eps_avg = " << eps_avg << " after "
          << sol.iterations << " iterations";
      warnings.push_back(msg.str());
    }
    w = sol.weights.w();
    a = sol.a;
    if (sol.selection_score < best.selection_score) best = std::move(sol);
  }
  best.iterations = total_iterations;
  best.converged = all_converged;
  best.warnings = std::move(warnings);
  best.data_dependent_payments = true;
  return best;
}

ConvergenceProbe LinearConvergenceProbe(const Dataset& data,
                                        const SensitivityProfile& c,
                                        const HyperParams& params,
                                        const SensitivityDistribution& dist,
                                        double eps_avg, const RngSpec& rng,
                                        int iterations) {
  if (iterations < 2) Fail(ErrorCode::kInvalidArgument, "need 2 iterations");
  const JointProblem problem(data, c, params, dist,
                             SampleNoise(data.dims(), 1.0, rng));
  Vector w;
  Vector a;
  JointStartingPoint(problem, JointInit::kZero, rng, 0, w, a);

  JointOptions precise;
  precise.tolerance = 1e-13;
  precise.max_iterations = 200000;
  const double f_star = MinimizeJoint(problem, eps_avg, w, a, precise).objective;

  JointOptions fixed;
  fixed.tolerance = 0.0;
  fixed.max_iterations = iterations;
  std::vector<double> trace;
  MinimizeJoint(problem, eps_avg, w, a, fixed, &trace);

  ConvergenceProbe probe;
  double floor = f_star;
  for (double v : trace) floor = std::min(floor, v);
  const double noise_level = 1e-13 * std::max(1.0, std::abs(floor));
  std::vector<double> ts;
  std::vector<double> logs;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const double gap = trace[t] - floor;
    probe.gaps.push_back(gap);
    if (gap > noise_level) {
      ts.push_back(static_cast<double>(t));
      logs.push_back(std::log(gap));
    }
  }
  if (ts.size() < 2) {
    // Converged to rounding level within a step.
    probe.rate = 0.0;
    return probe;
  }
  double mt = 0.0;
  double ml = 0.0;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    mt += ts[j];
    ml += logs[j];
  }
  mt /= static_cast<double>(ts.size());
  ml /= static_cast<double>(ts.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    sxy += (ts[j] - mt) * (logs[j] - ml);
    sxx += (ts[j] - mt) * (ts[j] - mt);
  }
  const double slope = sxy / sxx;
  probe.rate = std::exp(slope);
  probe.log_intercept = ml - slope * mt;
  probe.envelope_intercept = -kInfinity;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    probe.envelope_intercept =
        std::max(probe.envelope_intercept, logs[j] - slope * ts[j]);
  }
  return probe;
}

MechanismOutcome JointOutcome(const Dataset& data, const SensitivityProfile& c,
                              const HyperParams& params,
                              const SensitivityDistribution& dist,
                              const RngSpec& rng, const JointOptions& options,
                              const QuadratureConfig& q) {
  const JointSolution sol = FitJoint(data, c, params, dist, rng, options);
  const Eigen::Index m = data.rows();
  MechanismOutcome outcome;
  outcome.allocation = PrivacyAllocation::FromWeights(sol.a, sol.eta);
  outcome.weights = sol.weights;

  // Payments: seller i's share as a function of its report, re-solved at the
  // chosen eps_avg and warm-started from the fitted point.
  JointProblem problem(data, c, params, dist, sol.noise);
  QuadratureConfig bounded = q;
  bounded.z_max = std::min(q.z_max, dist.support_high());
  outcome.payments.t = Vector::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (outcome.allocation.epsilon[i] == 0.0) continue;
    const AllocationRule eps = [&](double z) {
      JointProblem varied = problem;
      varied.psi[i] = dist.ReportVirtualCost(z);
      const JointSolution re =
          MinimizeJoint(varied, sol.eps_avg, sol.weights.w(), sol.a, options);
      return re.a[i] * re.eta;
    };
    outcome.payments.t[i] = PaymentForSeller(eps, c[i], bounded);
  }

  Diagnostics& diag = outcome.diagnostics;
  diag.seed = rng.seed();
  diag.solver = "joint";
  diag.delta = PrivacySlack(params.k, m, params.lambda_reg);
  diag.effective_k = params.k;
  diag.proxy_loss = ProxyLoss(c, outcome.allocation.epsilon, params.mu,
                              params.sigma, params.gamma, dist);
  diag.allocation_iterations = sol.iterations;
  diag.data_dependent_payments = true;
  return outcome;
}

}  // namespace privmarket
