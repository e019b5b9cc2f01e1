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

#include "privmarket/types.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "privmarket/errors.h"

namespace privmarket {
namespace {

// Slack on the unit row-norm bound.
constexpr double kRowNormSlack = 1e-12;

}  // namespace

Dataset::Dataset(Matrix features, Vector labels, double scale)
    : features_(std::move(features)), labels_(std::move(labels)),
      scale_(scale) {
  if (features_.rows() < 1 || features_.cols() < 1) {
    Fail(ErrorCode::kInvalidData, "dataset needs at least one row and column");
  }
  if (labels_.size() != features_.rows()) {
    Fail(ErrorCode::kDimensionMismatch,
         "label count " + std::to_string(labels_.size()) +
             " differs from row count " + std::to_string(features_.rows()));
  }
  if (!features_.allFinite()) {
    Fail(ErrorCode::kInvalidData, "features contain a non-finite value");
  }
  for (Eigen::Index i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 1.0 && labels_[i] != -1.0) {
      Fail(ErrorCode::kInvalidLabels,
           "label at row " + std::to_string(i) + " is not ±1");
    }
  }
  const double max_norm = features_.rowwise().norm().maxCoeff();
  if (max_norm > 1.0 + kRowNormSlack) {
    Fail(ErrorCode::kInvalidData,
         "row norm " + std::to_string(max_norm) + " exceeds 1");
  }
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
    Fail(ErrorCode::kInvalidArgument, "scale must be positive and finite");
  }
}

Dataset Dataset::Subset(const std::vector<Eigen::Index>& indices) const {
  Matrix x(static_cast<Eigen::Index>(indices.size()), dims());
  Vector y(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const Eigen::Index src = indices[r];
    if (src < 0 || src >= rows()) {
      Fail(ErrorCode::kInvalidArgument, "subset index out of range");
    }
    x.row(static_cast<Eigen::Index>(r)) = features_.row(src);
    y[static_cast<Eigen::Index>(r)] = labels_[src];
  }
  return Dataset(std::move(x), std::move(y), scale_);
}

SensitivityProfile::SensitivityProfile(Vector c) : c_(std::move(c)) {
  if (c_.size() == 0) {
    Fail(ErrorCode::kEmptyProfile, "sensitivity profile is empty");
  }
  for (Eigen::Index i = 0; i < c_.size(); ++i) {
    if (!(c_[i] >= 0.0) || !std::isfinite(c_[i])) {
      Fail(ErrorCode::kInvalidArgument,
           "sensitivity " + std::to_string(i) + " is negative or non-finite");
    }
  }
}

SensitivityProfile SensitivityProfile::WithReport(Eigen::Index i,
                                                  double z) const {
  Vector copy = c_;
  copy[i] = z;
  return SensitivityProfile(std::move(copy));
}

void HyperParams::Validate(bool allow_zero_weights) const {
  const auto require_positive = [](double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      Fail(ErrorCode::kInvalidArgument,
           std::string(name) + " must be positive and finite");
    }
  };
  const auto require_weight = [&](double value, const char* name) {
    if (!allow_zero_weights) return require_positive(value, name);
    if (!(value >= 0.0) || !std::isfinite(value)) {
      Fail(ErrorCode::kInvalidArgument,
           std::string(name) + " must be nonnegative and finite");
    }
  };
  require_weight(mu, "mu");
  require_weight(sigma, "sigma");
  require_weight(gamma, "gamma");
  require_positive(lambda_reg, "lambda_reg");
  require_positive(k, "k");
  require_positive(L, "L");
  require_positive(beta, "beta");
  if (k < 1.0) {
    Fail(ErrorCode::kInvalidArgument, "k must be at least 1");
  }
}

HyperParams SigmaFromMuPreset(HyperParams params) {
  params.sigma = params.mu * params.mu;
  return params;
}

PrivacyAllocation PrivacyAllocation::FromEpsilon(const Vector& epsilon) {
  const double eta = epsilon.sum();
  if (!(eta > 0.0)) {
    Fail(ErrorCode::kDegenerateAllocation, "Σε must be positive");
  }
  return PrivacyAllocation{epsilon / eta, eta, epsilon};
}

PrivacyAllocation PrivacyAllocation::FromWeights(const Vector& a, double eta) {
  if (!(eta > 0.0)) {
    Fail(ErrorCode::kInvalidEta, "η must be positive");
  }
  return PrivacyAllocation{a, eta, a * eta};
}

double AllocationResiduals::max_residual() const {
  return std::max({eta_positive, nonnegativity, simplex, cap, privacy});
}

AllocationResiduals ValidateAllocation(const PrivacyAllocation& alloc,
                                       const HyperParams& params,
                                       Eigen::Index m) {
  if (alloc.a.size() != m || alloc.epsilon.size() != m) {
    Fail(ErrorCode::kDimensionMismatch,
         "allocation vectors must have length " + std::to_string(m));
  }
  AllocationResiduals r;
  // η must be strictly positive, so η = 0 still reports a unit residual.
  r.eta_positive = alloc.eta > 0.0 ? 0.0 : 1.0 - alloc.eta;
  r.nonnegativity = std::max(0.0, -alloc.a.minCoeff());
  r.simplex = std::abs(alloc.a.sum() - 1.0);
  const double cap = params.k / static_cast<double>(m);
  r.cap = std::max(0.0, alloc.a.maxCoeff() - cap);
  r.privacy = std::max(0.0, (alloc.a * alloc.eta - alloc.epsilon).maxCoeff());
  r.feasible = r.max_residual() <= kFeasibilityTolerance;
  return r;
}

ModelWeights::ModelWeights(Vector w) : w_(std::move(w)), norm_(w_.norm()) {}

}  // namespace privmarket
