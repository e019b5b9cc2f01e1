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


#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "privmarket/dp_logreg.h"
#include "privmarket/errors.h"
#include "privmarket/rng.h"
#include "privmarket/synthetic.h"

namespace privmarket {
namespace {

NoiseVector FixedNoise(const Vector& b_prime) {
  NoiseVector noise;
  noise.b_prime = b_prime;
  noise.eta_used = 1.0;
  noise.raw_norm = b_prime.norm() / 2.0;
  noise.direction = b_prime.norm() > 0 ? Vector(b_prime.normalized())
                                       : Vector(Vector::Zero(b_prime.size()));
  return noise;
}

Dataset RandomDataset(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.m = m;
  spec.n = n;
  spec.rho = 0.01;
  return GenerateSynthetic(spec, RngSpec(seed)).data;
}

Vector RandomWeights(Eigen::Index m, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Vector a(m);
  for (Eigen::Index i = 0; i < m; ++i) a[i] = u(gen);
  return a / a.sum();
}

TEST(SampleNoise, NormMeanMatchesGammaMean) {
  const int n = 5;
  const double eta = 0.8;
  const int draws = 10000;
  double sum = 0.0;
  for (int d = 0; d < draws; ++d) {
    sum += SampleNoise(n, eta, RngSpec(1).Derive("draw", d)).b_prime.norm();
  }
  const double mean = sum / draws;
  const double se = 2.0 * std::sqrt(static_cast<double>(n)) / eta / std::sqrt(draws);
  EXPECT_NEAR(mean, 2.0 * n / eta, 3.0 * se);
}

TEST(SampleNoise, OneDimensionalDirectionIsAFairSign) {
  int positive = 0;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    const NoiseVector b = SampleNoise(1, 1.0, RngSpec(2).Derive("draw", d));
    ASSERT_EQ(std::abs(b.direction[0]), 1.0);
    positive += b.direction[0] > 0;
  }
  EXPECT_NEAR(positive, draws / 2, 3.0 * std::sqrt(draws * 0.25));
}

TEST(SampleNoise, DeterministicAndConsistentlyScaled) {
  const NoiseVector a = SampleNoise(4, 0.5, RngSpec(3));
  const NoiseVector b = SampleNoise(4, 0.5, RngSpec(3));
  EXPECT_EQ(a.b_prime, b.b_prime);
  EXPECT_NEAR(a.b_prime.norm(), 2.0 * a.raw_norm / a.eta_used, 1e-12);
  EXPECT_NEAR((a.ScaledFor(2.0) - a.b_prime / 4.0).norm(), 0.0, 1e-12);
}

TEST(PerturbedObjective, ZeroWeightsGiveLogTwo) {
  const Dataset d = RandomDataset(20, 3, 1);
  const Vector a = RandomWeights(20, 2);
  EXPECT_NEAR(PerturbedObjective(d, Vector::Zero(3), a, Vector::Ones(3), 0.3),
              std::log(2.0), 1e-15);
}

TEST(PerturbedObjective, SinglePointOnTheBoundary) {
  Matrix x(1, 2);
  x << 0.6, 0.0;
  const Dataset d(x, Vector::Ones(1));
  Vector w(2);
  w << 0.0, 5.0;
  EXPECT_NEAR(PerturbedObjective(d, w, Vector::Ones(1), Vector::Zero(2), 0.0),
              std::log(2.0), 1e-15);
}

TEST(PerturbedObjective, MatchesTermByTermSum) {
  const Dataset d = RandomDataset(40, 4, 3);
  const Vector a = RandomWeights(40, 4);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector w(4), b(4);
    for (int j = 0; j < 4; ++j) {
      w[j] = 3.0 * normal(gen);
      b[j] = normal(gen);
    }
    const double lambda = 0.25;
    long double sum = 0.0L;
    for (Eigen::Index i = 0; i < 40; ++i) {
      long double margin = 0.0L;
      for (int j = 0; j < 4; ++j) margin += d.features()(i, j) * w[j];
      margin *= d.labels()[i];
      sum += a[i] * std::log1p(std::exp(-static_cast<double>(margin)));
    }
    for (int j = 0; j < 4; ++j) sum += b[j] * w[j] + 0.5L * lambda * w[j] * w[j];
    EXPECT_NEAR(PerturbedObjective(d, w, a, b, lambda),
                static_cast<double>(sum), 1e-12 * std::abs(static_cast<double>(sum)));
  }
}

TEST(PerturbedObjective, DimensionMismatchIsAnError) {
  const Dataset d = RandomDataset(5, 2, 1);
  try {
    PerturbedObjective(d, Vector::Zero(3), RandomWeights(5, 1), Vector::Zero(3), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(PerturbedObjective, StrictlyConvexAlongRandomDirections) {
  const Dataset d = RandomDataset(30, 3, 6);
  const Vector a = RandomWeights(30, 7);
  const double lambda = 0.4;
  std::mt19937_64 gen(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-4;
  for (int trial = 0; trial < 100; ++trial) {
    Vector w(3), dir(3), b(3);
    for (int j = 0; j < 3; ++j) {
      w[j] = normal(gen);
      dir[j] = normal(gen);
      b[j] = normal(gen);
    }
    dir.normalize();
    const double second =
        (PerturbedObjective(d, w + h * dir, a, b, lambda) -
         2.0 * PerturbedObjective(d, w, a, b, lambda) +
         PerturbedObjective(d, w - h * dir, a, b, lambda)) / (h * h);
    EXPECT_GE(second, lambda - 1e-6);
  }
}

TEST(PerturbedObjectiveGradient, MatchesCentralDifferences) {
  const Dataset d = RandomDataset(25, 3, 9);
  const Vector a = RandomWeights(25, 10);
  Vector w(3), b(3);
  w << 0.4, -1.2, 2.0;
  b << 0.1, 0.2, -0.3;
  const Vector g = PerturbedObjectiveGradient(d, w, a, b, 0.7);
  for (int j = 0; j < 3; ++j) {
    const double h = 1e-6;
    Vector e = Vector::Zero(3);
    e[j] = h;
    const double fd = (PerturbedObjective(d, w + e, a, b, 0.7) -
                       PerturbedObjective(d, w - e, a, b, 0.7)) / (2 * h);
    EXPECT_NEAR(g[j], fd, 1e-7);
  }
}

TEST(Fit, HeavyRidgeGivesMinusNoiseOverLambda) {
  Matrix x(2, 2);
  x << 0.5, 0.1, -0.2, 0.7;
  Vector y(2);
  y << 1, -1;
  const Dataset d(x, y);
  Vector b(2);
  b << 3e3, -4e3;
  const double lambda = 1e6;
  const FitReport r = FitWithNoise(d, Vector::Constant(2, 0.5), FixedNoise(b), lambda);
  const Vector expected = -b / lambda;
  EXPECT_LT((r.weights.w() - expected).norm(), 1e-3 * expected.norm());
}

TEST(Fit, SymmetricPairAlignsWithTheFeature) {
  Matrix x(2, 2);
  x << 0.3, 0.4, -0.3, -0.4;
  Vector y(2);
  y << 1, -1;
  const Dataset d(x, y);
  const FitReport r =
      FitWithNoise(d, Vector::Constant(2, 0.5), FixedNoise(Vector::Zero(2)), 0.1);
  const Vector& w = r.weights.w();
  EXPECT_NEAR(w[0] * 0.4 - w[1] * 0.3, 0.0, 1e-10);
  EXPECT_GT(w[0], 0.0);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.gradient_norm, r.tolerance);
}

TEST(Fit, RecoveredNoiseMatchesTheSampledNoise) {
  const Dataset d = RandomDataset(60, 5, 11);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector a = RandomWeights(60, 100 + trial);
    const double eta = 0.05 * (trial + 1);
    const auto alloc = PrivacyAllocation::FromWeights(a, eta);
    const double lambda = 0.1 + 0.2 * trial;
    const FitReport r = Fit(d, alloc, lambda, RngSpec(trial));
    const Vector recovered = RecoverNoiseFromOptimality(d, r.weights.w(), a, lambda);
    EXPECT_LT((recovered - r.noise.b_prime).norm(), 1e-6);
    EXPECT_LE(r.gradient_norm, r.tolerance);
    // The same RngSpec reproduces the same draw and fit.
    EXPECT_EQ(Fit(d, alloc, lambda, RngSpec(trial)).weights.w(), r.weights.w());
  }
}

TEST(RecoverNoiseFromOptimality, ZeroWeightsGiveHalfTheWeightedSum) {
  const Dataset d = RandomDataset(10, 3, 12);
  const Vector a = RandomWeights(10, 13);
  Vector expected = Vector::Zero(3);
  for (Eigen::Index i = 0; i < 10; ++i) {
    expected += a[i] * d.labels()[i] * d.features().row(i).transpose() / 2.0;
  }
  EXPECT_LT((RecoverNoiseFromOptimality(d, Vector::Zero(3), a, 1.0) - expected)
                .norm(),
            1e-15);
}

TEST(RecoverNoiseFromOptimality, NeighbouringDatasetsNeedCloseNoise) {
  const Dataset d1 = RandomDataset(30, 3, 14);
  Matrix x2 = d1.features();
  Vector y2 = d1.labels();
  x2.row(29) = -x2.row(29);
  const Dataset d2(x2, y2);
  const Vector a = RandomWeights(30, 15);
  const FitReport r =
      Fit(d1, PrivacyAllocation::FromWeights(a, 1.0), 0.5, RngSpec(16));
  const Vector b1 = RecoverNoiseFromOptimality(d1, r.weights.w(), a, 0.5);
  const Vector b2 = RecoverNoiseFromOptimality(d2, r.weights.w(), a, 0.5);
  EXPECT_LT((b1 - b2).norm(), 2.0 * a[29]);
}

TEST(Fit, RunningOutOfIterationsCarriesTheBestIterate) {
  const Dataset d = RandomDataset(30, 3, 17);
  FitOptions options;
  options.max_iterations = 1;
  try {
    FitWithNoise(d, RandomWeights(30, 1), FixedNoise(Vector::Ones(3)), 1e-3, options);
    FAIL();
  } catch (const SolverDivergedError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSolverDiverged);
    EXPECT_EQ(e.best().weights.w().size(), 3);
  }
}

TEST(PrivacySlack, DirectFormula) {
  EXPECT_NEAR(PrivacySlack(2.0, 1000, 0.1), 0.0396053, 1e-7);
  EXPECT_NEAR(PrivacySlack(2.0, 1000, 0.1), 2.0 * std::log(1.02), 1e-15);
  EXPECT_NEAR(PrivacySlack(3.0, 30, 0.1), 2.0 * std::log(2.0), 1e-15);
  EXPECT_LT(PrivacySlack(2.0, 1000000000, 1e3), 1e-11);
}

}  // namespace
}  // namespace privmarket
