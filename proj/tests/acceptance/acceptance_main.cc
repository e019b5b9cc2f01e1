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


// Runs each acceptance criterion once and prints one PASS/FAIL line per
// criterion. Exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "privmarket/bounds.h"
#include "privmarket/dp_logreg.h"
#include "privmarket/errors.h"
#include "privmarket/experiments.h"
#include "privmarket/joint_optimizer.h"
#include "privmarket/offline_mechanism.h"
#include "privmarket/payments.h"
#include "privmarket/simplex_projection.h"
#include "privmarket/synthetic.h"

namespace privmarket {
namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Verdict()> run;
};

const SensitivityDistribution& Unit() {
  static const SensitivityDistribution dist =
      SensitivityDistribution::Uniform(0.0, 1.0);
  return dist;
}

HyperParams Slack() {
  HyperParams p;
  p.mu = 1.0;
  p.sigma = 1.0;
  p.gamma = 1.0;
  p.k = 1e6;
  return p;
}

double RelativeGap(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

Verdict HomogeneousOracle() {
  const Eigen::Index m = 100;
  const HyperParams p = Slack();
  // ψ(0.5) = 1 under U[0, 1].
  const SensitivityProfile c(Vector::Constant(m, 0.5));
  const double oracle =
      p.mu / std::sqrt(static_cast<double>(m)) + 2.0 * std::sqrt(p.sigma * p.gamma);
  const KktSolution kkt = SolveKkt(c, p, Unit());
  const double kkt_loss = ProxyLoss(c, kkt.epsilon, p.mu, p.sigma, p.gamma, Unit());
  const PgdSolution pgd = SolvePgd(c, p, Unit(), SolverGrid::ForProblem(m, p.L));
  const double kkt_gap = RelativeGap(kkt_loss, oracle);
  const double pgd_gap = RelativeGap(pgd.proxy_loss, oracle);
  std::ostringstream out;
  out << "oracle " << oracle << ", kkt rel gap " << kkt_gap << ", pgd rel gap "
      << pgd_gap << ", pgd eta " << pgd.allocation.eta;
  return {kkt_gap <= 1e-6 && pgd_gap <= 1e-6 &&
              std::abs(pgd.allocation.eta - 1.0) <= 1e-3,
          out.str()};
}

Verdict SolverCrossValidation() {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> size(10, 50);
  const HyperParams p = Slack();
  double worst = 0.0;
  int compared = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index m = size(gen);
    const SensitivityProfile c =
        SampleSensitivities(Unit(), m, RngSpec(2024).Derive("instance", trial));
    const KktSolution kkt = SolveKkt(c, p, Unit());
    if (kkt.cap_binding) continue;
    const double lk = ProxyLoss(c, kkt.epsilon, p.mu, p.sigma, p.gamma, Unit());
    const PgdSolution pgd = SolvePgd(c, p, Unit(), SolverGrid::ForProblem(m, p.L));
    worst = std::max(worst, RelativeGap(pgd.proxy_loss, lk));
    ++compared;
  }
  std::ostringstream out;
  out << compared << " slack instances, worst rel gap " << worst;
  return {compared == 20 && worst <= 1e-4, out.str()};
}

Verdict IcIrAudit() {
  const IcAuditReport report = RunIcAudit(AuditDefaults());
  const double bound = 1e-5 * report.instance_scale();
  std::ostringstream out;
  out << "max IC violation " << report.max_violation() << " (bound " << bound
      << "), max IR cost " << report.max_ir_cost();
  return {report.max_violation() <= bound && report.max_ir_cost() <= 1e-8, out.str()};
}

Verdict PaymentIdentity() {
  const PaymentIdentityResult r = RunPaymentIdentity(AuditDefaults());
  std::ostringstream out;
  out << "E[sum t] " << r.mean_payments << ", E[sum eps psi] "
      << r.mean_virtual_payments << ", rel gap " << r.gap << " over " << r.draws
      << " draws";
  return {r.draws == 10000 && r.gap < 0.02, out.str()};
}

Verdict ScalingLaw() {
  const ScalingResult r = ScalingExperiment(ScalingDefaults());
  std::ostringstream out;
  out << "log-log slope " << r.slope;
  return {r.slope >= -0.35 && r.slope <= -0.15, out.str()};
}

Verdict CompetitiveRatio() {
  const CompetitiveRatioResult r =
      CompetitiveRatioExperiment(CompetitiveRatioDefaults());
  bool at_least_one = true;
  std::ostringstream out;
  out << "median ratios";
  for (const CompetitiveRatioRow& row : r.rows) {
    out << " " << row.m << ":" << row.ratio.median;
    at_least_one = at_least_one && row.ratio.median >= 1.0;
  }
  const double first = r.rows.front().ratio.median;
  const double last = r.rows.back().ratio.median;
  return {at_least_one && last < first && last <= 1.5, out.str()};
}

Verdict DpInternals() {
  SyntheticSpec spec;
  spec.m = 200;
  spec.n = 5;
  const Dataset data = GenerateSynthetic(spec, RngSpec(7)).data;
  const HyperParams p = Slack();
  double worst_recovery = 0.0;
  for (int s = 0; s < 10; ++s) {
    const SensitivityProfile c =
        SampleSensitivities(Unit(), spec.m, RngSpec(7).Derive("costs", s));
    const AllocationSolve solve = SolveAllocation(c, p, Unit());
    const FitReport fit =
        Fit(data, solve.allocation, p.lambda_reg, RngSpec(7).Derive("fit", s));
    const Vector recovered = RecoverNoiseFromOptimality(
        data, fit.weights.w(), solve.allocation.a, p.lambda_reg);
    worst_recovery = std::max(worst_recovery, (recovered - fit.noise.b_prime).norm());
  }

  const int draws = 10000;
  const Eigen::Index n = 5;
  const double eta = 2.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < draws; ++s) {
    const double norm = SampleNoise(n, eta, RngSpec(8).Derive("draw", s)).b_prime.norm();
    sum += norm;
    sum_sq += norm * norm;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sum_sq / draws - mean * mean) / (draws - 1));
  const double expected = 2.0 * n / eta;
  const double slack = PrivacySlack(2.0, 1000, 0.1);

  std::ostringstream out;
  out << "worst noise recovery " << worst_recovery << ", mean |b'| " << mean
      << " vs " << expected << " (" << std::abs(mean - expected) / se
      << " SE), slack " << slack;
  return {worst_recovery <= 1e-6 && std::abs(mean - expected) <= 3.0 * se &&
              std::abs(slack - 0.0396053) <= 1e-7,
          out.str()};
}

Verdict Convexity() {
  const Eigen::Index m = 20;
  SyntheticSpec spec;
  spec.m = m;
  spec.n = 4;
  const Dataset data = GenerateSynthetic(spec, RngSpec(9)).data;
  const SensitivityProfile c = SampleSensitivities(Unit(), m, RngSpec(10));
  HyperParams p;
  p.lambda_reg = 1.0;
  p.mu = static_cast<double>(m);
  p.k = 2.0;
  const double margin = ConvexityMargin(p, m);

  const JointProblem problem(data, c, p, Unit(), SampleNoise(spec.n, 1.0, RngSpec(11)));
  std::mt19937_64 gen(12);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.2, 1.0);
  const double h = 1e-4;
  double min_curvature = kInfinity;
  for (int trial = 0; trial < 200; ++trial) {
    Vector w(spec.n);
    for (Eigen::Index j = 0; j < spec.n; ++j) w[j] = normal(gen);
    Vector a(m);
    for (Eigen::Index i = 0; i < m; ++i) a[i] = uniform(gen);
    a /= a.sum();
    Vector dw(spec.n);
    Vector da(m);
    for (Eigen::Index j = 0; j < spec.n; ++j) dw[j] = normal(gen);
    for (Eigen::Index i = 0; i < m; ++i) da[i] = normal(gen);
    const double norm = std::sqrt(dw.squaredNorm() + da.squaredNorm());
    dw /= norm;
    da /= norm;
    const double eps_avg = 0.01 + 0.99 * (trial % 10) / 9.0;
    const double f0 = JointObjective(problem, w, a, eps_avg);
    const double fp = JointObjective(problem, w + h * dw, a + h * da, eps_avg);
    const double fm = JointObjective(problem, w - h * dw, a - h * da, eps_avg);
    min_curvature = std::min(min_curvature, (fp - 2.0 * f0 + fm) / (h * h));
  }

  JointOptions first;
  first.init = JointInit::kRandom;
  first.init_index = 0;
  JointOptions second = first;
  second.init_index = 1;
  const JointSolution s1 = FitJoint(data, c, p, Unit(), RngSpec(13), first);
  const JointSolution s2 = FitJoint(data, c, p, Unit(), RngSpec(13), second);
  const double objective_gap = std::abs(s1.objective - s2.objective);

  const ConvergenceProbe probe =
      LinearConvergenceProbe(data, c, p, Unit(), 0.2, RngSpec(14));

  std::ostringstream out;
  out << "margin " << margin << ", min curvature " << min_curvature
      << ", init objective gap " << objective_gap << ", rate " << probe.rate;
  return {margin > 0.0 && min_curvature >= -1e-6 && objective_gap <= 1e-6 &&
              probe.rate < 1.0,
          out.str()};
}

Verdict BoundFunctions() {
  double worst_round_trip = 0.0;
  for (int n : {1, 2, 5, 30}) {
    for (double d : {1e-6, 1e-3, 0.01, 0.05, 0.3, 0.9}) {
      const double t = PoissonTailInverse(d, n);
      worst_round_trip = std::max(worst_round_trip, std::abs(PoissonTail(t, n) - d));
    }
  }
  double worst_n1 = 0.0;
  for (double d : {1e-9, 1e-4, 0.05, 0.5, 0.99}) {
    worst_n1 = std::max(worst_n1, std::abs(PoissonTailInverse(d, 1) + 2.0 * std::log(d)));
  }

  const Eigen::Index m = 8;
  SyntheticSpec spec;
  spec.m = m;
  spec.n = 3;
  const Dataset data = GenerateSynthetic(spec, RngSpec(15)).data;
  const JointProblem problem(data, SampleSensitivities(Unit(), m, RngSpec(16)), Slack(),
                             Unit(), SampleNoise(3, 1.0, RngSpec(17)));
  std::mt19937_64 gen(18);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.2, 1.0);
  const double h = 1e-6;
  double worst_grad = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Vector w(3);
    for (int j = 0; j < 3; ++j) w[j] = normal(gen);
    Vector a(m);
    for (Eigen::Index i = 0; i < m; ++i) a[i] = uniform(gen);
    a /= a.sum();
    const double eps_avg = 0.05 + 0.05 * trial;
    const JointGradient g = JointObjectiveGradient(problem, w, a, eps_avg);
    Vector z(3 + m);
    z << w, a;
    Vector analytic(3 + m);
    analytic << g.w, g.a;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      Vector zp = z;
      Vector zm = z;
      zp[k] += h;
      zm[k] -= h;
      const double fd = (JointObjective(problem, zp.head(3), zp.tail(m), eps_avg) -
                         JointObjective(problem, zm.head(3), zm.tail(m), eps_avg)) /
                        (2.0 * h);
      worst_grad = std::max(worst_grad,
                            std::abs(analytic[k] - fd) / std::max(1.0, std::abs(fd)));
    }
  }

  std::ostringstream out;
  out << "worst round trip " << worst_round_trip << ", worst n=1 inverse error "
      << worst_n1 << ", worst gradient rel error " << worst_grad;
  return {worst_round_trip < 1e-10 && worst_n1 <= 1e-12 && worst_grad <= 1e-5,
          out.str()};
}

Verdict GammaTrends() {
  const GammaSweepResult r = GammaSweep(GammaSweepDefaults());
  const auto payments = r.Medians("regularized", &GammaSweepRow::payments);
  const auto errors = r.Medians("regularized", &GammaSweepRow::misclassification);
  const auto regularized = r.Medians("regularized", &GammaSweepRow::overall);
  const auto naive = r.Medians("naive", &GammaSweepRow::overall);
  int wins = 0;
  for (std::size_t i = 0; i < regularized.size(); ++i) {
    if (regularized[i] <= naive[i]) ++wins;
  }
  const int payment_violations = CountIncreases(payments);
  const int error_violations = CountDecreases(errors);
  std::ostringstream out;
  out << "payment violations " << payment_violations
      << ", misclassification violations " << error_violations
      << ", regularized <= naive at " << wins << "/" << regularized.size();
  return {payments.size() == 5 && payment_violations <= 1 && error_violations <= 1 &&
              wins >= 4,
          out.str()};
}

}  // namespace
}  // namespace privmarket

int main() {
  using privmarket::Criterion;
  const std::vector<Criterion> criteria = {
      {1, "homogeneous oracle", 1.0, privmarket::HomogeneousOracle},
      {2, "solver cross-validation", 30.0, privmarket::SolverCrossValidation},
      {3, "IC/IR audit", 120.0, privmarket::IcIrAudit},
      {4, "payment identity", 300.0, privmarket::PaymentIdentity},
      {5, "scaling law", 600.0, privmarket::ScalingLaw},
      {6, "competitive ratio", 600.0, privmarket::CompetitiveRatio},
      {7, "DP internals", 60.0, privmarket::DpInternals},
      {8, "joint convexity", 60.0, privmarket::Convexity},
      {9, "bound functions", 10.0, privmarket::BoundFunctions},
      {10, "gamma-sweep trends", 900.0, privmarket::GammaTrends},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    privmarket::Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= c.budget_seconds;
    const bool pass = v.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %2d %s: %s; %.2fs (limit %.0fs)%s\n", pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), v.detail.c_str(), seconds, c.budget_seconds,
                in_time ? "" : " over time");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
