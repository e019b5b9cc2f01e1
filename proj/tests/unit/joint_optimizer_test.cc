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
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "privmarket/joint_optimizer.h"
#include "privmarket/simplex_projection.h"
#include "privmarket/synthetic.h"

namespace privmarket {
namespace {

const SensitivityDistribution& Unit() {
  static const SensitivityDistribution dist =
      SensitivityDistribution::Uniform(0.0, 1.0);
  return dist;
}

Dataset SmallData(Eigen::Index m, std::uint64_t seed = 1) {
  SyntheticSpec spec;
  spec.m = m;
  spec.n = 3;
  spec.rho = 0.05;
  return GenerateSynthetic(spec, RngSpec(seed)).data;
}

// Λ = 1 and μ = m, so 2Λμ − m = m > 0.
HyperParams Convex(Eigen::Index m) {
  HyperParams p;
  p.lambda_reg = 1.0;
  p.mu = static_cast<double>(m);
  p.sigma = 1.0;
  p.gamma = 1.0;
  p.k = 2.0;
  p.L = 1.0;
  return p;
}

Vector RandomSimplexPoint(Eigen::Index m, double cap, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Vector a(m);
  for (Eigen::Index i = 0; i < m; ++i) a[i] = u(gen);
  return ProjectCappedSimplex(a / a.sum(), cap);
}

TEST(JointObjective, UniformWeightsAtTheOrigin) {
  const Eigen::Index m = 12;
  const Dataset d = SmallData(m);
  const SensitivityProfile c = SampleSensitivities(Unit(), m, RngSpec(2));
  HyperParams p = Convex(m);
  p.mu = 0.7;
  p.sigma = 1.3;
  p.gamma = 2.0;
  const JointProblem problem(d, c, p, Unit(), SampleNoise(3, 1.0, RngSpec(3)));
  const Vector a = Vector::Constant(m, 1.0 / m);
  const double eps_avg = 0.05;
  const double eta = m * eps_avg;
  double mean_psi = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) mean_psi += Unit().VirtualCost(c[i]) / m;
  const double expected =
      std::log(2.0) + p.mu / m + p.sigma / eta + p.gamma * eta * mean_psi;
  EXPECT_NEAR(JointObjective(problem, Vector::Zero(3), a, eps_avg), expected, 1e-12);
}

TEST(JointObjective, MatchesTermByTermEvaluation) {
  const Eigen::Index m = 9;
  const Dataset d = SmallData(m, 4);
  const SensitivityProfile c = SampleSensitivities(Unit(), m, RngSpec(4));
  const HyperParams p = Convex(m);
  const NoiseVector noise = SampleNoise(3, 1.0, RngSpec(5));
  const JointProblem problem(d, c, p, Unit(), noise);
  std::mt19937_64 gen(6);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Vector w(3);
    for (int j = 0; j < 3; ++j) w[j] = normal(gen);
    const Vector a = RandomSimplexPoint(m, problem.cap(), gen);
    const double eps_avg = 0.01 + 0.1 * trial;
    const double eta = m * eps_avg;
    const Vector b = noise.ScaledFor(eta);
    double total = b.dot(w) + 0.5 * p.lambda_reg * w.squaredNorm() +
                   p.mu * a.squaredNorm() + p.sigma / eta;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double s = d.labels()[i] * d.features().row(i).dot(w);
      total += a[i] * std::log1p(std::exp(-s));
      total += p.gamma * eta * a[i] * 2.0 * c[i];
    }
    EXPECT_NEAR(JointObjective(problem, w, a, eps_avg), total,
                1e-12 * std::abs(total));
  }
}

TEST(JointObjective, ZeroPrivacyBudgetIsInfinitelyBad) {
  const Dataset d = SmallData(4);
  const JointProblem problem(d, SensitivityProfile(Vector::Constant(4, 0.5)),
                             Convex(4), Unit(), SampleNoise(3, 1.0, RngSpec(1)));
  EXPECT_EQ(JointObjective(problem, Vector::Zero(3), Vector::Constant(4, 0.25), 0.0),
            kInfinity);
}

TEST(JointObjectiveGradient, MatchesCentralDifferences) {
  const Eigen::Index m = 7;
  const Dataset d = SmallData(m, 8);
  const SensitivityProfile c = SampleSensitivities(Unit(), m, RngSpec(8));
  const JointProblem problem(d, c, Convex(m), Unit(), SampleNoise(3, 1.0, RngSpec(9)));
  std::mt19937_64 gen(10);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    Vector w(3);
    for (int j = 0; j < 3; ++j) w[j] = normal(gen);
    const Vector a = RandomSimplexPoint(m, 1.0, gen);
    const double eps_avg = 0.05 + 0.04 * trial;
    const JointGradient g = JointObjectiveGradient(problem, w, a, eps_avg);
    for (int j = 0; j < 3; ++j) {
      Vector wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd = (JointObjective(problem, wp, a, eps_avg) -
                         JointObjective(problem, wm, a, eps_avg)) / (2 * h);
      EXPECT_NEAR(g.w[j], fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      Vector ap = a, am = a;
      ap[i] += h;
      am[i] -= h;
      const double fd = (JointObjective(problem, w, ap, eps_avg) -
                         JointObjective(problem, w, am, eps_avg)) / (2 * h);
      EXPECT_NEAR(g.a[i], fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(ConvexityMargin, Examples) {
  HyperParams p;
  p.lambda_reg = 10.0;
  p.mu = 51.0;
  EXPECT_DOUBLE_EQ(ConvexityMargin(p, 20), 1000.0);
  p.lambda_reg = 0.5;
  p.mu = 1.0;
  EXPECT_DOUBLE_EQ(ConvexityMargin(p, 1), 0.0);
}

TEST(ConvexityMargin, HessianIsPositiveDefiniteWhenTheMarginIs) {
  const Eigen::Index m = 6;
  const Dataset d = SmallData(m, 11);
  const SensitivityProfile c = SampleSensitivities(Unit(), m, RngSpec(11));
  const HyperParams p = Convex(m);
  ASSERT_GT(ConvexityMargin(p, m), 0.0);
  const JointProblem problem(d, c, p, Unit(), SampleNoise(3, 1.0, RngSpec(12)));
  std::mt19937_64 gen(13);
  std::normal_distribution<double> normal(0.0, 2.0);
  const Eigen::Index dim = 3 + m;
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    Vector w(3);
    for (int j = 0; j < 3; ++j) w[j] = normal(gen);
    const Vector a = RandomSimplexPoint(m, 1.0, gen);
    const auto grad = [&](const Vector& z) {
      const JointGradient g =
          JointObjectiveGradient(problem, z.head(3), z.tail(m), 0.1);
      Vector out(dim);
      out << g.w, g.a;
      return out;
    };
    Vector z(dim);
    z << w, a;
    Matrix hess(dim, dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
      Vector zp = z, zm = z;
      zp[k] += h;
      zm[k] -= h;
      hess.col(k) = (grad(zp) - grad(zm)) / (2 * h);
    }
    const Matrix sym = 0.5 * (hess + hess.transpose());
    const double min_eig =
        Eigen::SelfAdjointEigenSolver<Matrix>(sym).eigenvalues().minCoeff();
    EXPECT_GT(min_eig, 0.0) << "trial " << trial;
  }
}

TEST(FitJoint, WarnsWhenTheObjectiveMayBeNonconvex) {
  const Eigen::Index m = 20;
  const Dataset d = SmallData(m);
  HyperParams p;
  p.lambda_reg = 0.1;
  p.mu = 1.0;
  JointOptions opt;
  opt.grid_points = 3;
  const JointSolution sol = FitJoint(d, SampleSensitivities(Unit(), m, RngSpec(1)), p,
                                     Unit(), RngSpec(2), opt);
  ASSERT_FALSE(sol.warnings.empty());
  EXPECT_NE(sol.warnings.front().find("nonconvex"), std::string::npos);
  EXPECT_LT(sol.convexity_margin, 0.0);
}

TEST(FitJoint, RandomStartsReachTheSameOptimum) {
  const Eigen::Index m = 20;
  const Dataset d = SmallData(m, 14);
  const SensitivityProfile c = SampleSensitivities(Unit(), m, RngSpec(14));
  JointOptions first;
  first.init = JointInit::kRandom;
  first.init_index = 0;
  first.grid_points = 10;
  JointOptions second = first;
  second.init_index = 1;
  const JointSolution s1 = FitJoint(d, c, Convex(m), Unit(), RngSpec(15), first);
  const JointSolution s2 = FitJoint(d, c, Convex(m), Unit(), RngSpec(15), second);
  EXPECT_TRUE(s1.warnings.empty());
  EXPECT_TRUE(s1.converged);
  EXPECT_DOUBLE_EQ(s1.eps_avg, s2.eps_avg);
  EXPECT_LT((s1.weights.w() - s2.weights.w()).norm(), 1e-6);
  EXPECT_LT((s1.a - s2.a).norm(), 1e-6);
  EXPECT_NEAR(s1.objective, s2.objective, 1e-9 * std::abs(s1.objective));
}

TEST(MinimizeJoint, RandomStartsAgreeAtAFixedBudget) {
  const Eigen::Index m = 20;
  const Dataset d = SmallData(m, 25);
  const JointProblem problem(d, SampleSensitivities(Unit(), m, RngSpec(25)), Convex(m),
                             Unit(), SampleNoise(3, 1.0, RngSpec(26)));
  const JointOptions opt;
  std::vector<JointSolution> sols;
  for (std::uint64_t k : {0, 1}) {
    Vector w;
    Vector a;
    JointStartingPoint(problem, JointInit::kRandom, RngSpec(27), k, w, a);
    sols.push_back(MinimizeJoint(problem, 0.3, w, a, opt));
    EXPECT_TRUE(sols.back().converged);
  }
  EXPECT_NE(sols[0].iterations, sols[1].iterations);
  EXPECT_LT((sols[0].weights.w() - sols[1].weights.w()).norm(), 1e-6);
  EXPECT_LT((sols[0].a - sols[1].a).norm(), 1e-6);
  EXPECT_NEAR(sols[0].objective, sols[1].objective, 1e-9);
}

TEST(FitJoint, ProhibitivePaymentWeightBuysTheLeastPrivacy) {
  const Eigen::Index m = 10;
  HyperParams p = Convex(m);
  // The ridge term grows like 1/η², so γ has to outweigh it as well.
  p.gamma = 1e16;
  JointOptions opt;
  opt.grid_points = 8;
  const JointSolution sol = FitJoint(SmallData(m), SampleSensitivities(Unit(), m, RngSpec(3)),
                                     p, Unit(), RngSpec(4), opt);
  EXPECT_DOUBLE_EQ(sol.eps_avg, EpsAvgGrid(p.L, 8).front());
}

TEST(FitJoint, InvariantToSellerOrder) {
  const Eigen::Index m = 15;
  const Dataset d = SmallData(m, 16);
  const SensitivityProfile c = SampleSensitivities(Unit(), m, RngSpec(16));
  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(17));
  Vector pc(m);
  for (Eigen::Index i = 0; i < m; ++i) pc[i] = c[order[i]];
  JointOptions opt;
  opt.grid_points = 10;
  const JointSolution base = FitJoint(d, c, Convex(m), Unit(), RngSpec(18), opt);
  const JointSolution perm = FitJoint(d.Subset(order), SensitivityProfile(pc), Convex(m),
                                      Unit(), RngSpec(18), opt);
  EXPECT_DOUBLE_EQ(base.eps_avg, perm.eps_avg);
  EXPECT_LT((base.weights.w() - perm.weights.w()).norm(), 1e-6);
  for (Eigen::Index i = 0; i < m; ++i) EXPECT_NEAR(perm.a[i], base.a[order[i]], 1e-6);
}

TEST(MinimizeJoint, RaisingASellersCostNeverRaisesTheirWeight) {
  const Eigen::Index m = 10;
  const Dataset d = SmallData(m, 19);
  const SensitivityProfile c = SampleSensitivities(Unit(), m, RngSpec(19));
  JointProblem problem(d, c, Convex(m), Unit(), SampleNoise(3, 1.0, RngSpec(20)));
  JointOptions opt;
  opt.tolerance = 1e-11;
  opt.max_iterations = 200000;
  const double eps_avg = 0.3;
  const JointSolution base = MinimizeJoint(problem, eps_avg, Vector::Zero(3),
                                           Vector::Constant(m, 1.0 / m), opt);
  for (Eigen::Index j = 0; j < m; ++j) {
    JointProblem raised = problem;
    raised.psi[j] += 0.5;
    const JointSolution sol = MinimizeJoint(raised, eps_avg, Vector::Zero(3),
                                            Vector::Constant(m, 1.0 / m), opt);
    EXPECT_LE(sol.a[j], base.a[j] + 1e-8) << "seller " << j;
  }
}

TEST(LinearConvergenceProbe, GapsShrinkGeometrically) {
  const Eigen::Index m = 20;
  const ConvergenceProbe probe =
      LinearConvergenceProbe(SmallData(m, 21), SampleSensitivities(Unit(), m, RngSpec(21)),
                             Convex(m), Unit(), 0.2, RngSpec(22), 100);
  ASSERT_GE(probe.gaps.size(), 2u);
  EXPECT_LT(probe.rate, 1.0);
  for (std::size_t t = 1; t < probe.gaps.size(); ++t) {
    EXPECT_LE(probe.gaps[t], probe.gaps[t - 1] + 1e-12);
  }
}

TEST(JointOutcome, RecordsTheJointSolverAndDataDependence) {
  const Eigen::Index m = 6;
  JointOptions opt;
  opt.grid_points = 4;
  const SensitivityProfile c = SampleSensitivities(Unit(), m, RngSpec(23));
  const MechanismOutcome out =
      JointOutcome(SmallData(m, 23), c, Convex(m), Unit(), RngSpec(24), opt);
  EXPECT_EQ(out.diagnostics.solver, "joint");
  EXPECT_TRUE(out.diagnostics.data_dependent_payments);
  EXPECT_EQ(out.payments.t.size(), m);
  EXPECT_GE(out.payments.t.minCoeff(), 0.0);
  EXPECT_NEAR(out.allocation.a.sum(), 1.0, 1e-12);
  EXPECT_LT((out.allocation.a * out.allocation.eta - out.allocation.epsilon).norm(),
            1e-12);
}

}  // namespace
}  // namespace privmarket
