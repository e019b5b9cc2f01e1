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

#include "privmarket/simplex_projection.h"

#include <algorithm>
#include <cmath>

#include "privmarket/errors.h"

namespace privmarket {
namespace {

double ClippedSum(const Vector& v, double tau, double cap) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    sum += std::clamp(v[i] - tau, 0.0, cap);
  }
  return sum;
}

}  // namespace

Vector ProjectCappedSimplex(const Vector& v, double cap) {
  const Eigen::Index m = v.size();
  if (m == 0) Fail(ErrorCode::kInvalidArgument, "cannot project empty vector");
  if (!(cap * static_cast<double>(m) >= 1.0 - 1e-12)) {
    Fail(ErrorCode::kInfeasibleCap, "cap·m must be at least 1");
  }
  if (!v.allFinite()) {
    Fail(ErrorCode::kInvalidArgument, "cannot project a non-finite vector");
  }
  // ClippedSum is non-increasing in τ: m·cap ≥ 1 at τ = min v − cap and 0 at
  // τ = max v.
  double lo = v.minCoeff() - cap;
  double hi = v.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (ClippedSum(v, mid, cap) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double tau = 0.5 * (lo + hi);

  // With the clipping pattern fixed, Σ a = 1 is linear in τ.
  double free_sum = 0.0;
  double at_cap = 0.0;
  Eigen::Index free_count = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double shifted = v[i] - tau;
    if (shifted >= cap) {
      at_cap += cap;
    } else if (shifted > 0.0) {
      free_sum += v[i];
      ++free_count;
    }
  }
  if (free_count > 0) {
    const double exact = (free_sum + at_cap - 1.0) / static_cast<double>(free_count);
    // Keep the refined τ only if it preserves the pattern it was derived from.
    bool consistent = true;
    for (Eigen::Index i = 0; i < m && consistent; ++i) {
      const double before = v[i] - tau;
      const double after = v[i] - exact;
      const bool free_before = before > 0.0 && before < cap;
      if (free_before && (after < 0.0 || after > cap)) consistent = false;
    }
    if (consistent) tau = exact;
  }
  Vector a(m);
  for (Eigen::Index i = 0; i < m; ++i) a[i] = std::clamp(v[i] - tau, 0.0, cap);
  return a;
}

double CappedSimplexKktResidual(const Vector& v, const Vector& a, double cap) {
  const Eigen::Index m = v.size();
  double residual = std::abs(a.sum() - 1.0);
  residual = std::max(residual, std::max(0.0, -a.minCoeff()));
  residual = std::max(residual, std::max(0.0, a.maxCoeff() - cap));
  // Shift τ implied by the interior coordinates.
  double tau_sum = 0.0;
  Eigen::Index interior = 0;
  constexpr double kEdge = 1e-12;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (a[i] > kEdge && a[i] < cap - kEdge) {
      tau_sum += v[i] - a[i];
      ++interior;
    }
  }
  if (interior == 0) return residual;
  const double tau = tau_sum / static_cast<double>(interior);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double shifted = v[i] - tau;
    if (a[i] > kEdge && a[i] < cap - kEdge) {
      residual = std::max(residual, std::abs(shifted - a[i]));
    } else if (a[i] <= kEdge) {
      residual = std::max(residual, std::max(0.0, shifted));
    } else {
      residual = std::max(residual, std::max(0.0, cap - shifted));
    }
  }
  return residual;
}

}  // namespace privmarket
