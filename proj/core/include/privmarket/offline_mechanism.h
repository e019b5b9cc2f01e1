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


#ifndef PRIVMARKET_OFFLINE_MECHANISM_H_
#define PRIVMARKET_OFFLINE_MECHANISM_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "privmarket/dp_logreg.h"
#include "privmarket/payments.h"
#include "privmarket/rng.h"
#include "privmarket/sensitivity.h"
#include "privmarket/types.h"

namespace privmarket {

// Log-spaced η values for the line search of the projected-gradient solver.
struct SolverGrid {
  double eta_min = 1e-4;
  double eta_max = 1.0;
  int points = 200;

  // [1e-4·m·L, m·L] with 200 points.
  static SolverGrid ForProblem(Eigen::Index m, double L);
  void Validate() const;
  std::vector<double> Values() const;
};

struct KktSolution {
  double lambda = 0.0;
  Vector epsilon;
  std::vector<Eigen::Index> active_set;  // sellers with γψ(c_i) < λ
  bool cap_binding = false;
  double residual = 0.0;  // |R(λ)| at the returned root
  // Every interval on which the multiplier equation changes sign.
  std::vector<RootBracket> brackets;
};

// R(λ) = λ − (σ/μ²)·S₂ − S₂/S₁ with S₁ = Σ(λ − p_i)⁺ and S₂ = Σ((λ − p_i)⁺)²,
// where p_i = γψ(c_i). Returns λ when no seller is active.
double MultiplierResidual(double lambda, const Vector& weighted_costs,
                          double mu, double sigma);

// Root of R over a sorted list of weighted costs, optionally with one extra
// cost merged in. S₁ and S₂ are the sums at the root.
struct MultiplierRoot {
  double lambda = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double residual = 0.0;
  Eigen::Index active = 0;
  double proxy_loss = kInfinity;  // loss of the stationary allocation at λ
};

// Scans the segments between consecutive costs for every place where R drops
// from positive to non-positive and bisects there. R is concave on each
// segment, so each segment holds at most one such crossing. Each crossing is
// a stationary point of the proxy loss; the one with the lowest loss is
// returned. Throws kNoInteriorSolution when R never crosses zero that way.
MultiplierRoot FindMultiplier(std::span<const double> sorted_costs,
                              std::optional<double> extra_cost, double mu,
                              double sigma,
                              std::vector<RootBracket>* brackets = nullptr);

// Closed-form stationary point of the proxy loss. Does not enforce the cap;
// cap_binding reports whether the result violates it.
KktSolution SolveKkt(const SensitivityProfile& c, const HyperParams& params,
                     const SensitivityDistribution& dist);
KktSolution SolveKktWithVirtualCosts(const Vector& psi,
                                     const HyperParams& params);

struct PgdOptions {
  double tolerance = 1e-9;  // on the projected-gradient mapping
  std::int64_t max_iterations = 100000;
  // Golden-section search on log η around the best grid point.
  bool refine = true;
};

struct PgdSolution {
  PrivacyAllocation allocation;
  double proxy_loss = kInfinity;
  std::int64_t iterations = 0;
  bool converged = true;
};

// For each η on the grid, minimizes μ‖a‖ + γη·Σa_iψ_i over the capped simplex
// by projected gradient descent, adds σ/η, and keeps the best η.
PgdSolution SolvePgd(const SensitivityProfile& c, const HyperParams& params,
                     const SensitivityDistribution& dist,
                     const SolverGrid& grid, const PgdOptions& options = {});
PgdSolution SolvePgdWithVirtualCosts(const Vector& psi,
                                     const HyperParams& params,
                                     const SolverGrid& grid,
                                     const PgdOptions& options = {});

// Result of the allocation step: the closed form when the cap is slack,
// projected gradient otherwise.
struct AllocationSolve {
  PrivacyAllocation allocation;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double proxy_loss = kInfinity;
  std::string solver;
  bool cap_binding = false;
  std::int64_t iterations = 0;
  std::vector<RootBracket> brackets;
};

struct OfflineOptions {
  std::optional<SolverGrid> grid;  // defaults to SolverGrid::ForProblem
  PgdOptions pgd;
  QuadratureConfig quadrature;
  FitOptions fit;
};

AllocationSolve SolveAllocation(const SensitivityProfile& c,
                                const HyperParams& params,
                                const SensitivityDistribution& dist,
                                const OfflineOptions& options = {});

// ε_i as a function of seller i's report with every other report held fixed.
// The other sellers' costs are sorted once so each evaluation is a single
// pass over them.
class ReportResponse {
 public:
  ReportResponse(const SensitivityProfile& c, Eigen::Index i,
                 const HyperParams& params,
                 const SensitivityDistribution& dist,
                 const OfflineOptions& options = {});

  double operator()(double z) const;

  // Smallest report at which seller i receives nothing. At least ψ⁻¹(λ₋ᵢ/γ),
  // where λ₋ᵢ is the multiplier of the market without seller i, and larger
  // when a stationary point that includes i keeps winning past it. +∞ when
  // seller i is alone.
  double Cutoff() const;

  // Evaluations that needed the projected-gradient fallback.
  std::int64_t fallbacks() const { return fallbacks_; }

 private:
  SensitivityProfile c_;
  Eigen::Index i_;
  HyperParams params_;
  const SensitivityDistribution* dist_;
  OfflineOptions options_;
  std::vector<double> others_;  // sorted γψ of every seller but i
  mutable std::int64_t fallbacks_ = 0;
};

// Re-solves with c_i replaced by z and returns the new ε_i.
double EpsilonOfReport(const SensitivityProfile& c, Eigen::Index i, double z,
                       const HyperParams& params,
                       const SensitivityDistribution& dist);

// Payment identity for every seller of an allocation computed on `c`.
PaymentSchedule OfflinePayments(const SensitivityProfile& c,
                                const HyperParams& params,
                                const SensitivityDistribution& dist,
                                const AllocationSolve& solve,
                                const OfflineOptions& options = {});

// Allocation, payments and the private fit. Throws kDimensionMismatch when
// |c| differs from the number of rows. A market that buys nothing yields a
// degenerate outcome with ε = 0, t = 0 and w = 0.
MechanismOutcome RunOfflineMechanism(const Dataset& data,
                                     const SensitivityProfile& c,
                                     const HyperParams& params,
                                     const SensitivityDistribution& dist,
                                     const RngSpec& rng,
                                     const OfflineOptions& options = {});

}  // namespace privmarket

#endif  // PRIVMARKET_OFFLINE_MECHANISM_H_
