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

#ifndef PRIVMARKET_TYPES_H_
#define PRIVMARKET_TYPES_H_

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace privmarket {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Absolute tolerance on every constraint residual of the feasible set.
inline constexpr double kFeasibilityTolerance = 1e-6;

// Feature rows with ‖x‖ ≤ 1 and labels in {−1, +1}. Immutable once built.
class Dataset {
 public:
  // Validates shape, finiteness, labels and the row-norm bound; throws Error
  // on any violation.
  Dataset(Matrix features, Vector labels, double scale = 1.0);

  const Matrix& features() const { return features_; }
  const Vector& labels() const { return labels_; }
  Eigen::Index rows() const { return features_.rows(); }
  Eigen::Index dims() const { return features_.cols(); }

  // Factor the raw features were divided by during normalization (1 when the
  // data already satisfied the bound).
  double scale() const { return scale_; }

  // Rows listed in `indices`, in that order.
  Dataset Subset(const std::vector<Eigen::Index>& indices) const;

 private:
  Matrix features_;
  Vector labels_;
  double scale_;
};

// Reported privacy sensitivities, one per seller, each ≥ 0.
class SensitivityProfile {
 public:
  explicit SensitivityProfile(Vector c);

  const Vector& values() const { return c_; }
  Eigen::Index size() const { return c_.size(); }
  double operator[](Eigen::Index i) const { return c_[i]; }

  // Copy with seller `i`'s report replaced by `z`.
  SensitivityProfile WithReport(Eigen::Index i, double z) const;

 private:
  Vector c_;
};

struct HyperParams {
  double mu = 1.0;          // weight on ‖a‖
  double sigma = 1.0;       // weight on 1/η
  double gamma = 1.0;       // weight on payments
  double lambda_reg = 0.1;  // ridge coefficient Λ
  double k = 2.0;           // allocation cap is k/m
  double L = 1.0;           // upper end of the ε_avg range
  double beta = 1.0;        // weight-norm scale used by the bound constants

  // Throws kInvalidArgument unless every field is positive and k ≥ 1. With
  // `allow_zero_weights`, μ, σ and γ may also be zero.
  void Validate(bool allow_zero_weights = false) const;
};

// Sets σ = μ², the hyperparameter schedule used by the asymptotic analysis.
HyperParams SigmaFromMuPreset(HyperParams params);

struct PrivacyAllocation {
  Vector a;
  double eta = 0.0;
  Vector epsilon;

  // a = ε/Σε and η = Σε. Requires Σε > 0.
  static PrivacyAllocation FromEpsilon(const Vector& epsilon);
  // ε = a·η.
  static PrivacyAllocation FromWeights(const Vector& a, double eta);
};

struct AllocationResiduals {
  double eta_positive = 0.0;  // 0 when η > 0, else 1 − η
  double nonnegativity = 0.0;
  double simplex = 0.0;  // |Σa − 1|
  double cap = 0.0;      // max(0, max_i a_i − k/m)
  double privacy = 0.0;  // max(0, max_i a_i·η − ε_i)
  bool feasible = false;

  double max_residual() const;
};

// Residual of each constraint defining the feasible (a, η, ε) set.
AllocationResiduals ValidateAllocation(const PrivacyAllocation& alloc,
                                       const HyperParams& params,
                                       Eigen::Index m);

struct PaymentSchedule {
  Vector t;
  double total() const { return t.sum(); }
};

class ModelWeights {
 public:
  ModelWeights() = default;
  explicit ModelWeights(Vector w);

  const Vector& w() const { return w_; }
  double norm() const { return norm_; }

 private:
  Vector w_;
  double norm_ = 0.0;
};

// Bracket [lo, hi] on the multiplier inside which the stationarity residual
// changes sign.
struct RootBracket {
  double lo = 0.0;
  double hi = 0.0;
};

struct Diagnostics {
  double delta = 0.0;  // privacy slack 2·ln(1 + k/(mΛ))
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double proxy_loss = kInfinity;
  std::uint64_t seed = 0;
  std::int64_t allocation_iterations = 0;
  std::int64_t fit_iterations = 0;
  std::string solver;  // "kkt", "pgd", "online", "joint"
  bool degenerate = false;
  bool cap_binding = false;
  // Cap constant the allocation was validated against; differs from the
  // configured k only for the online mechanism.
  double effective_k = 0.0;
  // Set when payments were derived from data-dependent weights.
  bool data_dependent_payments = false;
  std::vector<RootBracket> root_brackets;
};

struct MechanismOutcome {
  PrivacyAllocation allocation;
  PaymentSchedule payments;
  ModelWeights weights;
  Diagnostics diagnostics;
};

}  // namespace privmarket

#endif  // PRIVMARKET_TYPES_H_
