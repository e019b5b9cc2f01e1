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

#include "privmarket/dp_logreg.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace privmarket {
namespace {

void CheckShapes(const Dataset& data, const Vector& w, const Vector& a,
                 const Vector& b_prime) {
  if (w.size() != data.dims() || b_prime.size() != data.dims()) {
    Fail(ErrorCode::kDimensionMismatch,
         "weights and noise must have " + std::to_string(data.dims()) +
             " entries");
  }
  if (a.size() != data.rows()) {
    Fail(ErrorCode::kDimensionMismatch,
         "allocation must have " + std::to_string(data.rows()) + " entries");
  }
}

// Per-row margins y_i·wᵀx_i.
Vector Margins(const Dataset& data, const Vector& w) {
  return (data.features() * w).cwiseProduct(data.labels());
}

}  // namespace

Vector NoiseVector::ScaledFor(double eta) const {
  if (!(eta > 0.0)) Fail(ErrorCode::kInvalidEta, "η must be positive");
  return direction * (2.0 * raw_norm / eta);
}

NoiseVector NoiseVector::Zero(Eigen::Index n, double eta) {
  NoiseVector noise;
  noise.b_prime = Vector::Zero(n);
  noise.direction = Vector::Zero(n);
  noise.eta_used = eta;
  return noise;
}

NoiseVector SampleNoise(Eigen::Index n, double eta, const RngSpec& rng) {
  if (n < 1) Fail(ErrorCode::kInvalidArgument, "dimension must be positive");
  if (!(eta > 0.0)) Fail(ErrorCode::kInvalidEta, "η must be positive");
  Engine engine = rng.Stream(kNoiseStream);
  std::gamma_distribution<double> gamma(static_cast<double>(n), 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  NoiseVector noise;
  noise.raw_norm = gamma(engine);
  Vector direction(n);
  double norm = 0.0;
  // A standard-normal vector has zero norm with probability zero; redraw in
  // that case rather than divide by zero.
  do {
    for (Eigen::Index j = 0; j < n; ++j) direction[j] = normal(engine);
    norm = direction.norm();
  } while (norm == 0.0);
  noise.direction = direction / norm;
  noise.eta_used = eta;
  noise.b_prime = noise.direction * (2.0 * noise.raw_norm / eta);
  return noise;
}

double LogisticLoss(double margin) {
  // log(1 + e^{−s}) = max(−s, 0) + log1p(e^{−|s|})
  return std::max(-margin, 0.0) + std::log1p(std::exp(-std::abs(margin)));
}

double LogisticLossSlope(double margin) {
  // d/ds log(1 + e^{−s}) = −1/(1 + e^{s})
  if (margin >= 0.0) {
    const double e = std::exp(-margin);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(margin));
}

double PerturbedObjective(const Dataset& data, const Vector& w,
                          const Vector& a, const Vector& b_prime,
                          double lambda_reg) {
  CheckShapes(data, w, a, b_prime);
  const Vector margins = Margins(data, w);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    if (a[i] != 0.0) loss += a[i] * LogisticLoss(margins[i]);
  }
  return loss + b_prime.dot(w) + 0.5 * lambda_reg * w.squaredNorm();
}

double PerturbedObjective(const Dataset& data, const Vector& w,
                          const Vector& a, const NoiseVector& noise,
                          double lambda_reg) {
  return PerturbedObjective(data, w, a, noise.b_prime, lambda_reg);
}

Vector PerturbedObjectiveGradient(const Dataset& data, const Vector& w,
                                  const Vector& a, const Vector& b_prime,
                                  double lambda_reg) {
  CheckShapes(data, w, a, b_prime);
  const Vector margins = Margins(data, w);
  Vector coeff(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    coeff[i] = a[i] * LogisticLossSlope(margins[i]) * data.labels()[i];
  }
  return data.features().transpose() * coeff + b_prime + lambda_reg * w;
}

SolverDivergedError::SolverDivergedError(FitReport best)
    : Error(ErrorCode::kSolverDiverged,
            "no convergence after " + std::to_string(best.iterations) +
                " iterations (gradient norm " +
                std::to_string(best.gradient_norm) + ")"),
      best_(std::move(best)) {}

FitReport FitWithNoise(const Dataset& data, const Vector& a,
                       const NoiseVector& noise, double lambda_reg,
                       const FitOptions& options) {
  if (!(lambda_reg > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "ridge coefficient must be positive");
  }
  const Eigen::Index n = data.dims();
  const Vector& b = noise.b_prime;
  Vector w = Vector::Zero(n);
  Vector grad = PerturbedObjectiveGradient(data, w, a, b, lambda_reg);
  double value = PerturbedObjective(data, w, a, b, lambda_reg);

  const double tolerance =
      std::min(options.relative_tolerance * std::max(1.0, grad.norm()),
               options.absolute_cap);
  // Gradient Lipschitz constant: logistic curvature is at most 1/4 and
  // ‖x_i‖ ≤ 1.
  const double lipschitz = 0.25 * a.cwiseAbs().sum() + lambda_reg;
  const double safe_step = 1.0 / lipschitz;
  double step = safe_step;

  FitReport report;
  report.noise = noise;
  report.tolerance = tolerance;
  std::int64_t it = 0;
  for (; it < options.max_iterations; ++it) {
    const double grad_norm_sq = grad.squaredNorm();
    if (std::sqrt(grad_norm_sq) <= tolerance) break;
    // Try a longer step first, then backtrack (Armijo) down to the step that
    // is guaranteed to descend.
    step = std::min(4.0 * step, 64.0 * safe_step);
    Vector candidate;
    double candidate_value = 0.0;
    while (true) {
      candidate = w - step * grad;
      candidate_value = PerturbedObjective(data, candidate, a, b, lambda_reg);
      if (step <= safe_step ||
          candidate_value <= value - 1e-4 * step * grad_norm_sq) {
        break;
      }
      step = std::max(0.5 * step, safe_step);
    }
    w = std::move(candidate);
    value = candidate_value;
    grad = PerturbedObjectiveGradient(data, w, a, b, lambda_reg);
  }
  report.weights = ModelWeights(w);
  report.objective_value = value;
  report.gradient_norm = grad.norm();
  report.iterations = it;
  report.converged = report.gradient_norm <= tolerance;
  if (!report.converged) throw SolverDivergedError(std::move(report));
  return report;
}

FitReport Fit(const Dataset& data, const PrivacyAllocation& alloc,
              double lambda_reg, const RngSpec& rng,
              const FitOptions& options) {
  if (alloc.a.size() != data.rows()) {
    Fail(ErrorCode::kDimensionMismatch,
         "allocation length differs from dataset rows");
  }
  if (!(alloc.eta > 0.0)) Fail(ErrorCode::kInvalidEta, "η must be positive");
  if (alloc.a.minCoeff() < -kFeasibilityTolerance ||
      std::abs(alloc.a.sum() - 1.0) > kFeasibilityTolerance) {
    Fail(ErrorCode::kInvalidArgument, "weights a must lie on the simplex");
  }
  const NoiseVector noise = SampleNoise(data.dims(), alloc.eta, rng);
  return FitWithNoise(data, alloc.a, noise, lambda_reg, options);
}

double PrivacySlack(double k, Eigen::Index m, double lambda_reg) {
  if (!(k > 0.0) || m < 1 || !(lambda_reg > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "k, m and Λ must be positive");
  }
  return 2.0 * std::log1p(k / (static_cast<double>(m) * lambda_reg));
}

Vector RecoverNoiseFromOptimality(const Dataset& data, const Vector& w_hat,
                                  const Vector& a, double lambda_reg) {
  CheckShapes(data, w_hat, a, w_hat);
  const Vector margins = Margins(data, w_hat);
  Vector coeff(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    // a_i y_i / (1 + e^{margin_i}) = −a_i y_i ℓ′(margin_i)
    coeff[i] = -a[i] * data.labels()[i] * LogisticLossSlope(margins[i]);
  }
  return data.features().transpose() * coeff - lambda_reg * w_hat;
}

}  // namespace privmarket
