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


#include "privmarket/synthetic.h"

#include <cmath>
#include <random>
#include <sstream>

#include "privmarket/errors.h"

namespace privmarket {

void SyntheticSpec::Validate() const {
  if (m < 1 || n < 1) Fail(ErrorCode::kInvalidArgument, "m and n must be >= 1");
  if (!(rho > 0.0 && rho < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "rho must lie in (0, 1)");
  }
  if (w_star) {
    if (w_star->size() != n) {
      Fail(ErrorCode::kDimensionMismatch, "w_star must have n entries");
    }
    if (std::abs(w_star->norm() - 1.0) > 1e-9) {
      Fail(ErrorCode::kInvalidArgument, "w_star must have unit norm");
    }
  }
}

SyntheticData GenerateSynthetic(const SyntheticSpec& spec, const RngSpec& rng) {
  spec.Validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w_star;
  if (spec.w_star) {
    w_star = *spec.w_star;
  } else {
    Engine engine = rng.Stream(kDataStream, 1);
    w_star.resize(spec.n);
    do {
      for (Eigen::Index j = 0; j < spec.n; ++j) w_star[j] = normal(engine);
    } while (w_star.norm() == 0.0);
    w_star.normalize();
  }

  Engine engine = rng.Stream(kDataStream, 0);
  const double scale = 0.5 / std::sqrt(static_cast<double>(spec.n));
  const std::int64_t budget = 100 * static_cast<std::int64_t>(spec.m);
  Matrix x(spec.m, spec.n);
  Vector y(spec.m);
  Vector candidate(spec.n);
  std::int64_t attempts = 0;
  for (Eigen::Index i = 0; i < spec.m; ++i) {
    while (true) {
      if (attempts >= budget) {
        std::ostringstream msg;
        msg << "only " << i << " of " << spec.m << " points met margin "
            << spec.rho << " after " << attempts << " draws";
        Fail(ErrorCode::kMarginInfeasible, msg.str());
      }
      ++attempts;
      for (Eigen::Index j = 0; j < spec.n; ++j) {
        candidate[j] = scale * normal(engine);
      }
      const double norm = candidate.norm();
      if (norm > 1.0) candidate /= norm;
      const double score = w_star.dot(candidate);
      if (std::abs(score) >= spec.rho) {
        x.row(i) = candidate.transpose();
        y[i] = score > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
  }
  SyntheticData out{Dataset(std::move(x), std::move(y)), w_star, attempts};
  const Vector margins =
      (out.data.features() * w_star).cwiseProduct(out.data.labels());
  if (margins.minCoeff() < spec.rho) {
    Fail(ErrorCode::kMarginInfeasible, "generated data failed the margin audit");
  }
  return out;
}

double MisclassificationRate(const Vector& w, const Dataset& data) {
  if (w.size() != data.dims()) {
    Fail(ErrorCode::kDimensionMismatch, "weights and data dimensions differ");
  }
  const Vector scores = data.features() * w;
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    const double sign = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
    if (sign != data.labels()[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.rows());
}

double MisclassificationRate(const ModelWeights& w, const Dataset& data) {
  return MisclassificationRate(w.w(), data);
}

}  // namespace privmarket
