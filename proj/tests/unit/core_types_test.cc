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


#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "privmarket/dataset.h"
#include "privmarket/errors.h"
#include "privmarket/rng.h"
#include "privmarket/simplex_projection.h"
#include "privmarket/types.h"

namespace privmarket {
namespace {

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInvalidArgument;
}

TEST(NormalizeDataset, DividesByLargestRowNormAndMapsZeroLabels) {
  Matrix x(2, 2);
  x << 3, 4, 0, 0;
  Vector y(2);
  y << 1, 0;
  const Dataset d = NormalizeDataset(x, y);
  EXPECT_DOUBLE_EQ(d.features()(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(d.features()(0, 1), 0.8);
  EXPECT_EQ(d.features()(1, 0), 0.0);
  EXPECT_EQ(d.labels()[0], 1.0);
  EXPECT_EQ(d.labels()[1], -1.0);
  EXPECT_DOUBLE_EQ(d.scale(), 5.0);
}

TEST(NormalizeDataset, LeavesRowsInsideTheUnitBallAlone) {
  Matrix x(2, 2);
  x << 0.3, 0.4, -0.1, 0.2;
  Vector y(2);
  y << -1, 1;
  const Dataset d = NormalizeDataset(x, y);
  EXPECT_EQ(d.features(), x);
  EXPECT_EQ(d.scale(), 1.0);
}

TEST(NormalizeDataset, IsIdempotent) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal(0.0, 3.0);
  Matrix x(30, 4);
  Vector y(30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = normal(gen);
    y[i] = (i % 3 == 0) ? 1.0 : -1.0;
  }
  const Dataset once = NormalizeDataset(x, y);
  const Dataset twice = NormalizeDataset(once.features(), once.labels());
  EXPECT_EQ(once.features(), twice.features());
  EXPECT_EQ(once.labels(), twice.labels());
  EXPECT_LE(once.features().rowwise().norm().maxCoeff(), 1.0 + 1e-12);
}

TEST(NormalizeDataset, RejectsBadLabelsAndNonFiniteRows) {
  Matrix x = Matrix::Ones(3, 2);
  Vector y(3);
  y << 0, 1, 2;
  EXPECT_EQ(CodeOf([&] { NormalizeDataset(x, y); }), ErrorCode::kInvalidLabels);
  y << 1, -1, 1;
  x(1, 1) = std::nan("");
  EXPECT_EQ(CodeOf([&] { NormalizeDataset(x, y); }), ErrorCode::kInvalidData);
}

TEST(Dataset, RejectsRowsOutsideTheUnitBall) {
  Matrix x(1, 2);
  x << 1.0, 0.1;
  EXPECT_EQ(CodeOf([&] { Dataset(x, Vector::Ones(1)); }),
            ErrorCode::kInvalidData);
}

TEST(Dataset, CsvRoundTripIsExact) {
  std::istringstream in("f1,label,f2\n0.25,1,-0.5\n0.1,0,0.3\n");
  const RawTable raw = ParseDatasetCsv(in);
  ASSERT_EQ(raw.feature_names.size(), 2u);
  const Dataset d = NormalizeDataset(raw.features, raw.labels);
  std::ostringstream out;
  WriteDatasetCsv(d, out);
  std::istringstream back(out.str());
  const RawTable again = ParseDatasetCsv(back);
  EXPECT_EQ(again.features, d.features());
  EXPECT_EQ(again.labels, d.labels());
}

TEST(SensitivityProfile, RejectsNegativeAndEmpty) {
  Vector c(2);
  c << 0.5, -0.1;
  EXPECT_EQ(CodeOf([&] { SensitivityProfile{c}; }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { SensitivityProfile{Vector()}; }),
            ErrorCode::kEmptyProfile);
}

TEST(HyperParams, RequiresPositiveFieldsAndCapAtLeastOne) {
  HyperParams p;
  EXPECT_NO_THROW(p.Validate());
  p.k = 0.5;
  EXPECT_EQ(CodeOf([&] { p.Validate(); }), ErrorCode::kInvalidArgument);
  p = HyperParams{};
  p.mu = 0.0;
  EXPECT_EQ(CodeOf([&] { p.Validate(); }), ErrorCode::kInvalidArgument);
  EXPECT_NO_THROW(p.Validate(true));
  EXPECT_EQ(SigmaFromMuPreset(HyperParams{3.0}).sigma, 9.0);
}

TEST(ValidateAllocation, UniformAllocationIsFeasible) {
  const Eigen::Index m = 8;
  const auto alloc =
      PrivacyAllocation::FromWeights(Vector::Constant(m, 1.0 / m), 1.0);
  const AllocationResiduals r = ValidateAllocation(alloc, HyperParams{}, m);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.max_residual(), 0.0);
}

TEST(ValidateAllocation, ReportsSimplexResidual) {
  const Eigen::Index m = 3;
  const Vector a = Vector::Constant(m, 0.5);
  const auto alloc = PrivacyAllocation::FromWeights(a, 1.0);
  HyperParams p;
  p.k = 3.0;
  const AllocationResiduals r = ValidateAllocation(alloc, p, m);
  EXPECT_FALSE(r.feasible);
  EXPECT_NEAR(r.simplex, 0.5, 1e-15);
}

TEST(ValidateAllocation, ReportsCapResidual) {
  const Eigen::Index m = 10;
  HyperParams p;
  p.k = 2.0;
  Vector a = Vector::Constant(m, (1.0 - 2 * p.k / m) / (m - 1));
  a[0] = 2 * p.k / m;
  const AllocationResiduals r =
      ValidateAllocation(PrivacyAllocation::FromWeights(a, 1.0), p, m);
  EXPECT_FALSE(r.feasible);
  EXPECT_NEAR(r.cap, p.k / m, 1e-15);
}

TEST(ValidateAllocation, RejectsLengthMismatch) {
  const auto alloc = PrivacyAllocation::FromWeights(Vector::Constant(3, 1.0 / 3), 1.0);
  EXPECT_EQ(CodeOf([&] { ValidateAllocation(alloc, HyperParams{}, 4); }),
            ErrorCode::kDimensionMismatch);
}

TEST(PrivacyAllocation, FeasibleAllocationsKeepEpsilonUnderCapTimesAverage) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index m = 2 + trial % 40;
    HyperParams p;
    p.k = 1.0 + trial % 4;
    Vector v(m);
    for (Eigen::Index i = 0; i < m; ++i) v[i] = u(gen);
    const Vector a = ProjectCappedSimplex(v, std::min(1.0, p.k / m));
    const double eta = 0.1 + trial;
    const auto alloc = PrivacyAllocation::FromWeights(a, eta);
    ASSERT_TRUE(ValidateAllocation(alloc, p, m).feasible);
    for (Eigen::Index i = 0; i < m; ++i) {
      EXPECT_LE(alloc.epsilon[i], p.k * eta / m * (1 + 1e-12));
    }
    EXPECT_NEAR(alloc.epsilon.sum(), eta, 1e-9 * eta);
  }
}

TEST(PrivacyAllocation, FromEpsilonRecoversWeightsAndBudget) {
  Vector eps(3);
  eps << 1.0, 2.0, 1.0;
  const auto alloc = PrivacyAllocation::FromEpsilon(eps);
  EXPECT_DOUBLE_EQ(alloc.eta, 4.0);
  EXPECT_DOUBLE_EQ(alloc.a[1], 0.5);
  EXPECT_EQ(CodeOf([] { PrivacyAllocation::FromEpsilon(Vector::Zero(2)); }),
            ErrorCode::kDegenerateAllocation);
}

TEST(ModelWeights, CachesNorm) {
  Vector w(2);
  w << 3, 4;
  EXPECT_DOUBLE_EQ(ModelWeights(w).norm(), 5.0);
}

TEST(RngSpec, SameSeedAndLabelGiveSameStream) {
  const RngSpec a(42), b(42);
  Engine x = a.Stream(kNoiseStream, 3);
  Engine y = b.Stream(kNoiseStream, 3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(x(), y());
}

TEST(RngSpec, LabelsIndicesAndDerivedSpecsAreDistinct) {
  const RngSpec r(42);
  EXPECT_NE(r.Stream(kNoiseStream)(), r.Stream(kDataStream)());
  EXPECT_NE(r.Stream(kNoiseStream, 0)(), r.Stream(kNoiseStream, 1)());
  EXPECT_NE(r.Derive("cell", 1).seed(), r.Derive("cell", 2).seed());
  EXPECT_NE(r.Derive("cell", 1).seed(), r.seed());
}

TEST(SplitDataset, IsDisjointCompleteAndSeedDeterministic) {
  Matrix x(50, 1);
  for (Eigen::Index i = 0; i < 50; ++i) x(i, 0) = i / 100.0;
  const Dataset d(x, Vector::Ones(50));
  const TrainTestSplit s1 = SplitDataset(d, 0.8, RngSpec(5));
  const TrainTestSplit s2 = SplitDataset(d, 0.8, RngSpec(5));
  EXPECT_EQ(s1.train.rows(), 40);
  EXPECT_EQ(s1.test.rows(), 10);
  EXPECT_EQ(s1.train.features(), s2.train.features());
  std::vector<double> all;
  for (Eigen::Index i = 0; i < 40; ++i) all.push_back(s1.train.features()(i, 0));
  for (Eigen::Index i = 0; i < 10; ++i) all.push_back(s1.test.features()(i, 0));
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(all[i], i / 100.0);
}

}  // namespace
}  // namespace privmarket
