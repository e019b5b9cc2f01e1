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

#ifndef PRIVMARKET_SIMPLEX_PROJECTION_H_
#define PRIVMARKET_SIMPLEX_PROJECTION_H_

#include "privmarket/types.h"

namespace privmarket {

// Euclidean projection onto {a : 0 ≤ a_i ≤ cap, Σ a_i = 1}. The result has
// the form a_i = clip(v_i − τ, 0, cap); τ is located by bisection and then
// recomputed exactly from the set of unclipped coordinates.
//
// Throws kInfeasibleCap when cap·m < 1.
Vector ProjectCappedSimplex(const Vector& v, double cap);

// Largest violation of the projection's optimality conditions: coordinates
// strictly inside (0, cap) share one value of v_i − a_i, those at 0 lie
// below it and those at the cap lie above it.
double CappedSimplexKktResidual(const Vector& v, const Vector& a, double cap);

}  // namespace privmarket

#endif  // PRIVMARKET_SIMPLEX_PROJECTION_H_
