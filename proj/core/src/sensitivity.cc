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

#include "privmarket/sensitivity.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "privmarket/errors.h"

namespace privmarket {
namespace {

constexpr double kNormalizationTolerance = 1e-8;
// Upper tail mass left out of the tabulated range for unbounded support.
constexpr double kTailMass = 1e-12;
constexpr int kBisectionIterations = 200;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Index j of the segment [x_j, x_{j+1}] containing c; requires c inside the
// knot range.
std::size_t SegmentOf(const std::vector<PdfKnot>& knots, double c) {
  auto it = std::upper_bound(
      knots.begin(), knots.end(), c,
      [](double value, const PdfKnot& knot) { return value < knot.x; });
  std::size_t j = static_cast<std::size_t>(it - knots.begin());
  j = j == 0 ? 0 : j - 1;
  return std::min(j, knots.size() - 2);
}

void ValidateFamily(const DistributionFamily& family) {
  std::visit(
      Overloaded{
          [](const UniformFamily& u) {
            if (!(u.low >= 0.0) || !(u.high > u.low) ||
                !std::isfinite(u.high)) {
              Fail(ErrorCode::kInvalidDistribution,
                   "uniform needs 0 <= low < high < inf");
            }
          },
          [](const ExponentialFamily& e) {
            if (!(e.rate > 0.0) || !std::isfinite(e.rate)) {
              Fail(ErrorCode::kInvalidDistribution,
                   "exponential rate must be positive");
            }
          },
          [](const PiecewiseLinearFamily& p) {
            if (p.knots.size() < 2) {
              Fail(ErrorCode::kInvalidDistribution,
                   "piecewise-linear pdf needs at least two knots");
            }
            if (!(p.knots.front().x >= 0.0)) {
              Fail(ErrorCode::kInvalidDistribution,
                   "piecewise-linear support must start at or above 0");
            }
            for (std::size_t j = 0; j < p.knots.size(); ++j) {
              const PdfKnot& k = p.knots[j];
              if (!std::isfinite(k.x) || !std::isfinite(k.density) ||
                  k.density < 0.0) {
                Fail(ErrorCode::kInvalidDistribution,
                     "knots must be finite with nonnegative density");
              }
              if (j > 0 && !(k.x > p.knots[j - 1].x)) {
                Fail(ErrorCode::kInvalidDistribution,
                     "knot positions must be strictly increasing");
              }
            }
          },
      },
      family);
}

}  // namespace

SensitivityDistribution::SensitivityDistribution(DistributionFamily family,
                                                 int table_knots)
    : family_(std::move(family)) {
  ValidateFamily(family_);
  if (table_knots < 8) {
    Fail(ErrorCode::kInvalidArgument, "table needs at least 8 knots");
  }

  // Normalization check by composite Simpson on the tabulated range; exact
  // for the piecewise-linear family because knots are added as breakpoints.
  std::vector<double> breaks{support_low(), TableHigh()};
  if (const auto* p = std::get_if<PiecewiseLinearFamily>(&family_)) {
    breaks.clear();
    for (const PdfKnot& k : p->knots) breaks.push_back(k.x);
  }
  double mass = 0.0;
  constexpr int kPanels = 4096;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double lo = breaks[s];
    const double h = (breaks[s + 1] - lo) / kPanels;
    double acc = 0.0;
    for (int j = 0; j <= kPanels; ++j) {
      // Evaluate strictly inside the segment so the density at a shared knot
      // is taken from this segment's interpolant.
      double x = lo + j * h;
      if (j == 0) x = lo + 1e-15 * std::max(1.0, std::abs(lo));
      if (j == kPanels) x = breaks[s + 1] - 1e-15 * std::max(1.0, breaks[s + 1]);
      const double w = (j == 0 || j == kPanels) ? 1.0 : (j % 2 ? 4.0 : 2.0);
      acc += w * Pdf(x);
    }
    mass += acc * h / 3.0;
  }
  if (std::holds_alternative<ExponentialFamily>(family_)) mass += kTailMass;
  if (std::abs(mass - 1.0) > kNormalizationTolerance) {
    std::ostringstream msg;
    msg << "density integrates to " << mass << ", not 1";
    Fail(ErrorCode::kInvalidDistribution, msg.str());
  }

  auto curve = std::make_shared<VirtualCostCurve>();
  const double lo = support_low();
  const double hi = TableHigh();
  curve->c.resize(static_cast<std::size_t>(table_knots));
  curve->psi.resize(static_cast<std::size_t>(table_knots));
  for (int j = 0; j < table_knots; ++j) {
    const double c = lo + (hi - lo) * j / (table_knots - 1);
    curve->c[static_cast<std::size_t>(j)] = c;
    if (Pdf(c) == 0.0 && Cdf(c) > 0.0 && j != table_knots - 1) {
      Fail(ErrorCode::kInvalidDistribution,
           "density vanishes inside the support, so ψ is not increasing");
    }
    curve->psi[static_cast<std::size_t>(j)] =
        (j == table_knots - 1 && Pdf(c) == 0.0) ? kInfinity : VirtualCost(c);
  }
  for (std::size_t j = 1; j < curve->psi.size(); ++j) {
    if (!(curve->psi[j] > curve->psi[j - 1])) {
      std::ostringstream msg;
      msg << "virtual cost is not strictly increasing near c = "
          << curve->c[j];
      Fail(ErrorCode::kInvalidDistribution, msg.str());
    }
  }
  curve_ = std::move(curve);
}

SensitivityDistribution SensitivityDistribution::Uniform(double low,
                                                         double high) {
  return SensitivityDistribution(UniformFamily{low, high});
}

SensitivityDistribution SensitivityDistribution::Exponential(double rate) {
  return SensitivityDistribution(ExponentialFamily{rate});
}

SensitivityDistribution SensitivityDistribution::PiecewiseLinear(
    std::vector<PdfKnot> knots) {
  return SensitivityDistribution(PiecewiseLinearFamily{std::move(knots)});
}

std::string SensitivityDistribution::Describe() const {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const UniformFamily& u) {
                   out << "uniform(" << u.low << ", " << u.high << ")";
                 },
                 [&](const ExponentialFamily& e) {
                   out << "exponential(" << e.rate << ")";
                 },
                 [&](const PiecewiseLinearFamily& p) {
                   out << "piecewise_linear(" << p.knots.size() << " knots)";
                 },
             },
             family_);
  return out.str();
}

double SensitivityDistribution::support_low() const {
  return std::visit(
      Overloaded{
          [](const UniformFamily& u) { return u.low; },
          [](const ExponentialFamily&) { return 0.0; },
          [](const PiecewiseLinearFamily& p) { return p.knots.front().x; },
      },
      family_);
}

double SensitivityDistribution::support_high() const {
  return std::visit(
      Overloaded{
          [](const UniformFamily& u) { return u.high; },
          [](const ExponentialFamily&) { return kInfinity; },
          [](const PiecewiseLinearFamily& p) { return p.knots.back().x; },
      },
      family_);
}

double SensitivityDistribution::TableHigh() const {
  if (const auto* e = std::get_if<ExponentialFamily>(&family_)) {
    return -std::log(kTailMass) / e->rate;
  }
  return support_high();
}

double SensitivityDistribution::Pdf(double c) const {
  return std::visit(
      Overloaded{
          [c](const UniformFamily& u) {
            return (c >= u.low && c <= u.high) ? 1.0 / (u.high - u.low) : 0.0;
          },
          [c](const ExponentialFamily& e) {
            return c >= 0.0 ? e.rate * std::exp(-e.rate * c) : 0.0;
          },
          [c](const PiecewiseLinearFamily& p) {
            if (c < p.knots.front().x || c > p.knots.back().x) return 0.0;
            const std::size_t j = SegmentOf(p.knots, c);
            const PdfKnot& l = p.knots[j];
            const PdfKnot& r = p.knots[j + 1];
            const double t = (c - l.x) / (r.x - l.x);
            return l.density + t * (r.density - l.density);
          },
      },
      family_);
}

double SensitivityDistribution::PdfSlope(double c) const {
  return std::visit(
      Overloaded{
          [](const UniformFamily&) { return 0.0; },
          [c](const ExponentialFamily& e) {
            return -e.rate * e.rate * std::exp(-e.rate * c);
          },
          [c](const PiecewiseLinearFamily& p) {
            if (c < p.knots.front().x || c > p.knots.back().x) return 0.0;
            const std::size_t j = SegmentOf(p.knots, c);
            const PdfKnot& l = p.knots[j];
            const PdfKnot& r = p.knots[j + 1];
            return (r.density - l.density) / (r.x - l.x);
          },
      },
      family_);
}

double SensitivityDistribution::Cdf(double c) const {
  return std::visit(
      Overloaded{
          [c](const UniformFamily& u) {
            return std::clamp((c - u.low) / (u.high - u.low), 0.0, 1.0);
          },
          [c](const ExponentialFamily& e) {
            return c <= 0.0 ? 0.0 : -std::expm1(-e.rate * c);
          },
          [c](const PiecewiseLinearFamily& p) {
            if (c <= p.knots.front().x) return 0.0;
            double mass = 0.0;
            for (std::size_t j = 0; j + 1 < p.knots.size(); ++j) {
              const PdfKnot& l = p.knots[j];
              const PdfKnot& r = p.knots[j + 1];
              if (c >= r.x) {
                mass += 0.5 * (l.density + r.density) * (r.x - l.x);
                continue;
              }
              const double t = (c - l.x) / (r.x - l.x);
              const double fc = l.density + t * (r.density - l.density);
              mass += 0.5 * (l.density + fc) * (c - l.x);
              break;
            }
            return std::min(mass, 1.0);
          },
      },
      family_);
}

double SensitivityDistribution::VirtualCost(double c) const {
  const double lo = support_low();
  const double hi = support_high();
  if (!(c >= lo && c <= hi)) {
    std::ostringstream msg;
    msg << "c = " << c << " is outside the support [" << lo << ", " << hi
        << "]";
    Fail(ErrorCode::kInvalidArgument, msg.str());
  }
  if (const auto* u = std::get_if<UniformFamily>(&family_)) {
    return 2.0 * c - u->low;
  }
  if (const auto* e = std::get_if<ExponentialFamily>(&family_)) {
    return c + std::expm1(e->rate * c) / e->rate;
  }
  const double cdf = Cdf(c);
  if (cdf == 0.0) return c;
  const double pdf = Pdf(c);
  if (pdf == 0.0) {
    if (c == hi) return kInfinity;
    std::ostringstream msg;
    msg << "f_C vanishes at interior point c = " << c;
    Fail(ErrorCode::kDegeneratePdf, msg.str());
  }
  return c + cdf / pdf;
}

double SensitivityDistribution::VirtualCostSlope(double c) const {
  if (std::holds_alternative<UniformFamily>(family_)) return 2.0;
  if (const auto* e = std::get_if<ExponentialFamily>(&family_)) {
    return 1.0 + std::exp(e->rate * c);
  }
  const double pdf = Pdf(c);
  const double cdf = Cdf(c);
  if (pdf == 0.0) {
    // Left edge of a density that starts at zero: F/f ~ (c − x₀)/2 locally.
    if (cdf == 0.0) return 1.5;
    return kInfinity;
  }
  return 2.0 - cdf * PdfSlope(c) / (pdf * pdf);
}

double SensitivityDistribution::ReportVirtualCost(double z) const {
  const double lo = support_low();
  const double hi = support_high();
  if (z >= lo && z <= hi) return VirtualCost(z);
  if (z > hi) {
    const double psi_hi = VirtualCost(hi);
    if (!std::isfinite(psi_hi)) return kInfinity;
    return psi_hi + VirtualCostSlope(hi) * (z - hi);
  }
  double slope = VirtualCostSlope(lo);
  if (!std::isfinite(slope)) {
    const VirtualCostCurve& t = *curve_;
    slope = (t.psi[1] - t.psi[0]) / (t.c[1] - t.c[0]);
  }
  return std::max(0.0, VirtualCost(lo) - slope * (lo - z));
}

double SensitivityDistribution::InverseVirtualCost(double x) const {
  if (x <= ReportVirtualCost(0.0)) return 0.0;
  const VirtualCostCurve& t = *curve_;
  double lo = 0.0;
  double hi = 0.0;
  if (x <= t.psi.front()) {
    hi = t.c.front();
  } else if (x <= t.psi.back()) {
    const auto it = std::lower_bound(t.psi.begin(), t.psi.end(), x);
    const auto j = static_cast<std::size_t>(it - t.psi.begin());
    lo = t.c[j - 1];
    hi = t.c[j];
  } else {
    lo = t.c.back();
    hi = std::max(1.0, 2.0 * lo);
    while (ReportVirtualCost(hi) < x) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) return kInfinity;
    }
  }
  for (int it = 0; it < kBisectionIterations && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (ReportVirtualCost(mid) < x) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

double SensitivityDistribution::virtual_cost_low() const {
  return VirtualCost(support_low());
}

double SensitivityDistribution::virtual_cost_high() const {
  const double hi = support_high();
  return std::isfinite(hi) ? VirtualCost(hi) : kInfinity;
}

double SensitivityDistribution::VirtualCostPdf(double x) const {
  if (x < virtual_cost_low() || x > virtual_cost_high()) return 0.0;
  const double c = std::clamp(InverseVirtualCost(x), support_low(),
                              support_high());
  const double slope = VirtualCostSlope(c);
  if (slope == 0.0) {
    std::ostringstream msg;
    msg << "ψ' vanishes at c = " << c;
    Fail(ErrorCode::kDegeneratePdf, msg.str());
  }
  if (!std::isfinite(slope)) return 0.0;
  return Pdf(c) / slope;
}

double SensitivityDistribution::VirtualCostCdf(double x) const {
  if (x < virtual_cost_low()) return 0.0;
  if (x >= virtual_cost_high()) return 1.0;
  return Cdf(std::clamp(InverseVirtualCost(x), support_low(), support_high()));
}

double SensitivityDistribution::VirtualCostDensityAtInfimum() const {
  return VirtualCostPdf(virtual_cost_low());
}

Assumption2Check SensitivityDistribution::CheckAssumption2() const {
  Assumption2Check check;
  if (support_low() > 0.0 || !(Pdf(0.0) > 0.0)) return check;
  const VirtualCostCurve& t = *curve_;
  check.holds = true;
  for (double c : t.c) {
    const double f = Pdf(c);
    if (!(f > 0.0) || !std::isfinite(f)) break;
    check.c1 = c;
  }
  return check;
}

SensitivityProfile SampleSensitivities(const SensitivityDistribution& dist,
                                       Eigen::Index m, const RngSpec& rng) {
  if (m < 1) Fail(ErrorCode::kEmptyProfile, "need at least one seller");
  Engine engine = rng.Stream(kSensitivityStream);
  Vector c(m);
  std::visit(
      Overloaded{
          [&](const UniformFamily& u) {
            std::uniform_real_distribution<double> draw(u.low, u.high);
            for (Eigen::Index i = 0; i < m; ++i) c[i] = draw(engine);
          },
          [&](const ExponentialFamily& e) {
            std::exponential_distribution<double> draw(e.rate);
            for (Eigen::Index i = 0; i < m; ++i) c[i] = draw(engine);
          },
          [&](const PiecewiseLinearFamily& p) {
            std::vector<double> xs;
            std::vector<double> ds;
            for (const PdfKnot& k : p.knots) {
              xs.push_back(k.x);
              ds.push_back(k.density);
            }
            std::piecewise_linear_distribution<double> draw(
                xs.begin(), xs.end(), ds.begin());
            for (Eigen::Index i = 0; i < m; ++i) c[i] = draw(engine);
          },
      },
      dist.family());
  return SensitivityProfile(std::move(c));
}

}  // namespace privmarket
