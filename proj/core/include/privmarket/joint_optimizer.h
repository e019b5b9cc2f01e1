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


#ifndef PRIVMARKET_JOINT_OPTIMIZER_H_
#define PRIVMARKET_JOINT_OPTIMIZER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "privmarket/dp_logreg.h"
#include "privmarket/payments.h"
#include "privmarket/rng.h"
#include "privmarket/sensitivity.h"
#include "privmarket/types.h"

namespace privmarket {

// Inputs shared by every evaluation of the joint objective: the data, the
// virtual costs and one noise draw.
struct JointProblem {
  const Dataset* data = nullptr;
  Vector psi;  // ψ(c_i)
  HyperParams params;
  NoiseVector noise;

  JointProblem(const Dataset& data, const SensitivityProfile& c,
               const HyperParams& params, const SensitivityDistribution& dist,
               NoiseVector noise);

  Eigen::Index m() const { return data->rows(); }
  double cap() const;
};

// Σa_i·ℓ_i(w) + b′ᵀw + (Λ/2)‖w‖² + μ‖a‖² + σ/η + γη·Σa_iψ_i, where
// η = m·eps_avg and b′ is the noise scaled for η. +∞ when eps_avg = 0.
double JointObjective(const JointProblem& problem, const Vector& w,
                      const Vector& a, double eps_avg);

struct JointGradient {
  Vector w;
  Vector a;
};

JointGradient JointObjectiveGradient(const JointProblem& problem,
                                     const Vector& w, const Vector& a,
                                     double eps_avg);

// 2Λμ − m; the objective is strictly convex in (w, a) when positive.
double ConvexityMargin(const HyperParams& params, Eigen::Index m);

// Log-spaced eps_avg values on [1e-4·L, L].
std::vector<double> EpsAvgGrid(double L, int points = 50);

enum class JointInit { kZero, kRandom };

struct JointOptions {
  int grid_points = 50;
  // On the joint projected-gradient mapping, relative to max(1, ‖b′‖).
  double tolerance = 1e-8;
  std::int64_t max_iterations = 20000;
  JointInit init = JointInit::kZero;
  // Substream index of the "init" stream used for random starts.
  std::uint64_t init_index = 0;
};

struct JointSolution {
  ModelWeights weights;
  Vector a;
  double eps_avg = 0.0;
  double eta = 0.0;
  double objective = kInfinity;
  // Objective without the b′ᵀw term; FitJoint ranks eps_avg values by it.
  double selection_score = kInfinity;
  double convexity_margin = 0.0;
  std::int64_t iterations = 0;
  bool converged = false;
  // Payments built on this allocation depend on the training data.
  bool data_dependent_payments = true;
  std::vector<std::string> warnings;
  NoiseVector noise;
};

// Projected gradient steps on (w, a) with a kept in the capped simplex, for
// one fixed eps_avg. Backtracks from α = 1 by halves with Armijo constant 1e−4.
JointSolution MinimizeJoint(const JointProblem& problem, double eps_avg,
                            Vector w, Vector a, const JointOptions& options,
                            std::vector<double>* trace = nullptr);

// Draws the noise once, minimizes for every grid eps_avg (warm-started) and
// keeps the best. Grid points are compared without the b′ᵀw term: its minimum
// over w is −‖b′‖²/(2Λ), which would reward ever smaller η, while σ/η already
// charges for the noise.
JointSolution FitJoint(const Dataset& data, const SensitivityProfile& c,
                       const HyperParams& params,
                       const SensitivityDistribution& dist, const RngSpec& rng,
                       const JointOptions& options = {});

// Starting point used by FitJoint: zeros and uniform weights, or a random
// draw from the "init" stream.
void JointStartingPoint(const JointProblem& problem, JointInit init,
                        const RngSpec& rng, std::uint64_t init_index,
                        Vector& w, Vector& a);

struct ConvergenceProbe {
  std::vector<double> gaps;  // f(wᵗ, aᵗ) − f*, t = 0, 1, ...
  double rate = 1.0;         // fitted geometric factor per iteration
  double log_intercept = 0.0;
  // Smallest intercept that puts the fitted line above every logged gap.
  double envelope_intercept = 0.0;
};

// Records the objective gap over the first `iterations` steps at a fixed
// eps_avg and fits log(gap) ≈ intercept + t·log(rate).
ConvergenceProbe LinearConvergenceProbe(const Dataset& data,
                                        const SensitivityProfile& c,
                                        const HyperParams& params,
                                        const SensitivityDistribution& dist,
                                        double eps_avg, const RngSpec& rng,
                                        int iterations = 200);

// Outcome record for the joint fit: ε = a·η and payment-identity payments
// obtained by re-solving with each seller's report varied at the chosen
// eps_avg.
MechanismOutcome JointOutcome(const Dataset& data, const SensitivityProfile& c,
                              const HyperParams& params,
                              const SensitivityDistribution& dist,
                              const RngSpec& rng,
                              const JointOptions& options = {},
                              const QuadratureConfig& q = {32});

}  // namespace privmarket

#endif  // PRIVMARKET_JOINT_OPTIMIZER_H_
