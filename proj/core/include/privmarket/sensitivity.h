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

#ifndef PRIVMARKET_SENSITIVITY_H_
#define PRIVMARKET_SENSITIVITY_H_

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "privmarket/rng.h"
#include "privmarket/types.h"

namespace privmarket {

struct UniformFamily {
  double low = 0.0;
  double high = 1.0;
};

struct ExponentialFamily {
  double rate = 1.0;
};

struct PdfKnot {
  double x = 0.0;
  double density = 0.0;
};

// Density linear between consecutive knots and zero outside them.
struct PiecewiseLinearFamily {
  std::vector<PdfKnot> knots;
};

using DistributionFamily =
    std::variant<UniformFamily, ExponentialFamily, PiecewiseLinearFamily>;

// Tabulated ψ on the support, used to bracket ψ⁻¹ before refining it by
// bisection on the exact curve.
struct VirtualCostCurve {
  std::vector<double> c;
  std::vector<double> psi;
};

struct Assumption2Check {
  bool holds = false;
  double c1 = 0.0;  // largest scanned c with f_C > 0 on all of [0, c]
};

// Distribution f_C of privacy sensitivities together with the virtual cost
// ψ(c) = c + F_C(c)/f_C(c) and the density f_Ψ of ψ(c).
//
// Construction verifies that the density integrates to one and that ψ is
// strictly increasing on the support; otherwise it throws
// kInvalidDistribution. Instances are immutable and cheap to copy.
class SensitivityDistribution {
 public:
  static constexpr int kDefaultTableKnots = 1024;

  explicit SensitivityDistribution(DistributionFamily family,
                                   int table_knots = kDefaultTableKnots);

  static SensitivityDistribution Uniform(double low, double high);
  static SensitivityDistribution Exponential(double rate);
  static SensitivityDistribution PiecewiseLinear(std::vector<PdfKnot> knots);

  const DistributionFamily& family() const { return family_; }
  std::string Describe() const;

  // Support [support_low, support_high]; support_high is +∞ for the
  // exponential family.
  double support_low() const;
  double support_high() const;

  double Pdf(double c) const;
  double Cdf(double c) const;

  // ψ(c) for c on the support. Throws kInvalidArgument outside the support
  // and kDegeneratePdf where f_C vanishes at an interior point.
  double VirtualCost(double c) const;

  // ψ extended to every report z ≥ 0: equal to VirtualCost on the support,
  // continued linearly with the boundary slope outside it and floored at 0.
  // Mechanisms evaluate misreports through this.
  double ReportVirtualCost(double z) const;

  // dψ/dc on the support.
  double VirtualCostSlope(double c) const;

  // Smallest z with ReportVirtualCost(z) ≥ x, by bisection bracketed from the
  // cached table.
  double InverseVirtualCost(double x) const;

  // Range [ψ(support_low), ψ(support_high)] of the virtual cost.
  double virtual_cost_low() const;
  double virtual_cost_high() const;

  // Density of ψ(c) at x; zero outside the range of ψ.
  double VirtualCostPdf(double x) const;
  double VirtualCostCdf(double x) const;

  // f_Ψ evaluated at the infimum of ψ's range (the right limit).
  double VirtualCostDensityAtInfimum() const;

  Assumption2Check CheckAssumption2() const;

  const VirtualCostCurve& curve() const { return *curve_; }

 private:
  double PdfSlope(double c) const;
  double TableHigh() const;

  DistributionFamily family_;
  std::shared_ptr<const VirtualCostCurve> curve_;
};

// m iid draws from the distribution. Throws kEmptyProfile when m = 0.
SensitivityProfile SampleSensitivities(const SensitivityDistribution& dist,
                                       Eigen::Index m, const RngSpec& rng);

}  // namespace privmarket

#endif  // PRIVMARKET_SENSITIVITY_H_
