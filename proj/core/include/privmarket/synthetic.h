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


#ifndef PRIVMARKET_SYNTHETIC_H_
#define PRIVMARKET_SYNTHETIC_H_

#include <cstdint>
#include <optional>

#include "privmarket/rng.h"
#include "privmarket/types.h"

namespace privmarket {

struct SyntheticSpec {
  Eigen::Index m = 500;
  Eigen::Index n = 10;
  double rho = 0.1;               // required margin y·w*ᵀx ≥ rho
  std::optional<Vector> w_star;   // unit separator; drawn from the seed if unset

  void Validate() const;
};

struct SyntheticData {
  Dataset data;
  Vector w_star;
  std::int64_t attempts = 0;  // candidate points drawn, accepted or not
};

// Gaussian points with per-coordinate standard deviation 1/(2√n), pulled back
// into the unit ball, labelled by sign(w*ᵀx). Candidates closer than rho to
// the separator are redrawn. Throws kMarginInfeasible after 100·m draws.
SyntheticData GenerateSynthetic(const SyntheticSpec& spec, const RngSpec& rng);

// Fraction of rows with sign(wᵀx) ≠ y; a zero score counts as wrong.
double MisclassificationRate(const ModelWeights& w, const Dataset& data);
double MisclassificationRate(const Vector& w, const Dataset& data);

}  // namespace privmarket

#endif  // PRIVMARKET_SYNTHETIC_H_
