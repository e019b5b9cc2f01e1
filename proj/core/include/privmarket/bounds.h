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

#ifndef PRIVMARKET_BOUNDS_H_
#define PRIVMARKET_BOUNDS_H_

#include "privmarket/sensitivity.h"
#include "privmarket/types.h"

namespace privmarket {

// Confidence levels and scales entering the generalization-bound constants.
struct BoundConfig {
  double delta = 0.05;        // concentration confidence
  double delta_prime = 0.05;  // noise-norm confidence
  double beta = 1.0;          // bound on ‖w‖
  int n = 1;                  // feature dimension

  // Throws kInvalidArgument unless 0 < δ, δ′ < 1, δ + δ′ < 1, β ≥ 0, n ≥ 1.
  void Validate() const;
};

// Poisson tail v(t) = Σ_{i<n} (t/2)^i / i! · e^{−t/2}, i.e. the probability
// that a Γ(n, 1) variable exceeds t/2. Summed in log space so large n and t
// neither overflow nor underflow.
double PoissonTail(double t, int n);

// t with PoissonTail(t, n) = delta_prime, by bisection after doubling the
// upper bracket.
double PoissonTailInverse(double delta_prime, int n);

// (3 ln(1/δ)/√2)·ln(1 + e^β) + β/ln 2.
double MuConstant(const BoundConfig& cfg);

// (6 ln(1/δ)/√2 + 1)·2β·v⁻¹(δ′).
double SigmaConstant(const BoundConfig& cfg);

// μ‖a‖ + σ/η. Throws kInvalidEta when η ≤ 0.
double ExcessRisk(const Vector& a, double eta, double mu, double sigma);

struct ProxyLossTerms {
  double norm_term = 0.0;     // μ‖a‖
  double eta_term = 0.0;      // σ/η
  double payment_term = 0.0;  // γ Σ ε_i ψ(c_i)
  double total = kInfinity;
  bool degenerate = false;    // Σε = 0; total is +∞
};

// Excess risk plus γ-weighted virtual payments with a = ε/Σε, η = Σε, and ψ
// evaluated on the reported costs.
ProxyLossTerms ProxyLossBreakdown(const SensitivityProfile& c,
                                  const Vector& epsilon, double mu,
                                  double sigma, double gamma,
                                  const SensitivityDistribution& dist);

double ProxyLoss(const SensitivityProfile& c, const Vector& epsilon, double mu,
                 double sigma, double gamma,
                 const SensitivityDistribution& dist);

// Same objective with precomputed virtual costs ψ(c_i).
double ProxyLossFromVirtualCosts(const Vector& psi, const Vector& epsilon,
                                 double mu, double sigma, double gamma);

}  // namespace privmarket

#endif  // PRIVMARKET_BOUNDS_H_
