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


#ifndef PRIVMARKET_ONLINE_MECHANISM_H_
#define PRIVMARKET_ONLINE_MECHANISM_H_

#include <limits>
#include <vector>

#include "privmarket/dp_logreg.h"
#include "privmarket/payments.h"
#include "privmarket/rng.h"
#include "privmarket/sensitivity.h"
#include "privmarket/types.h"

namespace privmarket {

struct OnlineConfig {
  Eigen::Index m_planned = 1;
  // f_Ψ used by the cutoff; NaN means "evaluate at the infimum of ψ's range".
  double density_at_zero = std::numeric_limits<double>::quiet_NaN();
  // Fraction of the planned sellers expected to show up. Only used when a
  // stream is generated.
  double xi = 1.0;

  // Throws kInvalidArgument unless m_planned ≥ 1, xi ∈ (0, 1] and any given
  // density is positive.
  void Validate() const;
  // density_at_zero, or the distribution's density at the infimum of ψ.
  double ResolveDensity(const SensitivityDistribution& dist) const;
};

struct SellerDecision {
  double epsilon = 0.0;
  double payment = 0.0;
  bool accepted = false;
};

// λ̃ = √(μ²γ / (σ·m·f_Ψ)).
double CutoffPrice(const HyperParams& params, const OnlineConfig& cfg,
                   const SensitivityDistribution& dist);

// ε̃(c) = 2√3·γ^{3/2}·μ·(λ̃ − γψ(c)) / (f_Ψ^{3/2}·m^{3/2}·λ̃^{7/2}) below the
// cutoff and 0 at or above it.
double OnlineEpsilon(double c_i, const HyperParams& params,
                     const OnlineConfig& cfg,
                     const SensitivityDistribution& dist);

// Report where γψ(z) reaches λ̃.
double OnlineCutoffReport(const HyperParams& params, const OnlineConfig& cfg,
                          const SensitivityDistribution& dist);

// Payment identity applied to z ↦ ε̃(z), integrated by quadrature up to the
// cutoff report (or the end of the support if that comes first).
double OnlinePayment(double c_i, const HyperParams& params,
                     const OnlineConfig& cfg,
                     const SensitivityDistribution& dist,
                     const QuadratureConfig& q = {});

// Same payment in closed form; ε̃ is affine in z for uniform sensitivities.
// Throws kInvalidDistribution for any other family.
double OnlinePaymentUniformClosedForm(double c_i, const HyperParams& params,
                                      const OnlineConfig& cfg,
                                      const SensitivityDistribution& dist);

// The decision for one arriving seller. Depends on nothing but the seller's
// own report and the fixed configuration.
SellerDecision DecideSeller(double c_i, const HyperParams& params,
                            const OnlineConfig& cfg,
                            const SensitivityDistribution& dist,
                            const QuadratureConfig& q = {});

// Decisions for a whole stream, issued in arrival order.
std::vector<SellerDecision> DecideStream(const SensitivityProfile& stream,
                                         const HyperParams& params,
                                         const OnlineConfig& cfg,
                                         const SensitivityDistribution& dist,
                                         const QuadratureConfig& q = {});

// ε̃ for every seller of the stream without computing payments.
Vector OnlineAllocation(const SensitivityProfile& stream,
                        const HyperParams& params, const OnlineConfig& cfg,
                        const SensitivityDistribution& dist);

struct OnlineOptions {
  QuadratureConfig quadrature;
  FitOptions fit;
};

// Decides every seller, then fits the private model with a = ε̃/Σε̃ and
// η = Σε̃. The stream must have one entry per dataset row and at most
// m_planned entries. When every seller is turned away the outcome is
// degenerate with w = 0.
MechanismOutcome RunOnlineMechanism(const Dataset& data,
                                    const SensitivityProfile& stream,
                                    const HyperParams& params,
                                    const OnlineConfig& cfg,
                                    const SensitivityDistribution& dist,
                                    const RngSpec& rng,
                                    const OnlineOptions& options = {});

}  // namespace privmarket

#endif  // PRIVMARKET_ONLINE_MECHANISM_H_
