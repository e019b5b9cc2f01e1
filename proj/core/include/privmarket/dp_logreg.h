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

#ifndef PRIVMARKET_DP_LOGREG_H_
#define PRIVMARKET_DP_LOGREG_H_

#include <cstdint>

#include "privmarket/errors.h"
#include "privmarket/rng.h"
#include "privmarket/types.h"

namespace privmarket {

// Objective-perturbation noise b′ = 2b/η where ‖b‖ ~ Γ(n, 1) and b/‖b‖ is
// uniform on the sphere.
struct NoiseVector {
  Vector b_prime;
  double eta_used = 0.0;
  double raw_norm = 0.0;  // ‖b‖ before the 2/η scaling
  Vector direction;       // unit vector b/‖b‖

  // b′ recomputed for a different η from the same underlying draw.
  Vector ScaledFor(double eta) const;
  static NoiseVector Zero(Eigen::Index n, double eta);
};

NoiseVector SampleNoise(Eigen::Index n, double eta, const RngSpec& rng);

// Σ a_i log(1 + exp(−y_i wᵀx_i)) + b′ᵀw + (Λ/2)‖w‖².
double PerturbedObjective(const Dataset& data, const Vector& w,
                          const Vector& a, const Vector& b_prime,
                          double lambda_reg);
double PerturbedObjective(const Dataset& data, const Vector& w,
                          const Vector& a, const NoiseVector& noise,
                          double lambda_reg);

Vector PerturbedObjectiveGradient(const Dataset& data, const Vector& w,
                                  const Vector& a, const Vector& b_prime,
                                  double lambda_reg);

// Numerically stable log(1 + e^{−s}) and its derivative −1/(1 + e^{s}).
double LogisticLoss(double margin);
double LogisticLossSlope(double margin);

struct FitOptions {
  // Stop once ‖∇‖ ≤ min(relative_tolerance·max(1, ‖∇(0)‖), absolute_cap).
  double relative_tolerance = 1e-8;
  double absolute_cap = 1e-9;
  std::int64_t max_iterations = 100000;
};

struct FitReport {
  ModelWeights weights;
  double objective_value = 0.0;
  double gradient_norm = 0.0;
  double tolerance = 0.0;
  std::int64_t iterations = 0;
  bool converged = false;
  NoiseVector noise;
};

// Thrown when the solver runs out of iterations; carries the best iterate.
class SolverDivergedError : public Error {
 public:
  explicit SolverDivergedError(FitReport best);
  const FitReport& best() const { return best_; }

 private:
  FitReport best_;
};

// Gradient descent with backtracking on the perturbed objective for a fixed
// noise draw.
FitReport FitWithNoise(const Dataset& data, const Vector& a,
                       const NoiseVector& noise, double lambda_reg,
                       const FitOptions& options = {});

// Draws one noise vector for η = alloc.eta from the "noise" stream of `rng`
// and minimizes the perturbed objective with weights alloc.a. Refitting with
// the same RngSpec reuses the identical draw.
FitReport Fit(const Dataset& data, const PrivacyAllocation& alloc,
              double lambda_reg, const RngSpec& rng,
              const FitOptions& options = {});

// Additive privacy slack 2·ln(1 + k/(mΛ)).
double PrivacySlack(double k, Eigen::Index m, double lambda_reg);

// The b′ for which `w_hat` is the exact stationary point:
// Σ a_i y_i x_i / (1 + exp(y_i ŵᵀx_i)) − Λŵ.
Vector RecoverNoiseFromOptimality(const Dataset& data, const Vector& w_hat,
                                  const Vector& a, double lambda_reg);

}  // namespace privmarket

#endif  // PRIVMARKET_DP_LOGREG_H_
