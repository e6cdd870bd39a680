// Copyright 2026 The MODSM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "modsm/optimizer.hpp"
#include "oracles.hpp"

namespace modsm {
namespace {

SolverState<double> random_solver_state(int n, std::mt19937_64& rng) {
  SolverState<double> s;
  s.b = oracle::random_vector(n, rng, 0, 1);
  s.w = oracle::random_vector(n, rng, 0, 1);
  s.c = oracle::random_vector(2 * n, rng);
  s.x = oracle::random_vector(n, rng);
  s.y = oracle::random_vector(2 * n, rng);
  std::uniform_real_distribution<double> mu(0.1, 10);
  s.mu = mu(rng);
  return s;
}

SolverState<double> single_pixel_state(double w, double x, double mu) {
  SolverState<double> s;
  s.w = Eigen::VectorXd::Constant(1, w);
  s.b = s.w;
  s.x = Eigen::VectorXd::Constant(1, x);
  s.c = Eigen::VectorXd::Zero(2);
  s.y = Eigen::VectorXd::Zero(2);
  s.mu = mu;
  return s;
}

TEST(AblationMode, RoundTrip) {
  for (auto mode : {AblationMode::Baseline, AblationMode::AddConnectivity, AblationMode::AddSaliencyMap})
    EXPECT_EQ(parse_ablation_mode(to_string(mode)), mode);
  EXPECT_THROW(parse_ablation_mode("full"), Error);
}

TEST(SolverParams, EffectiveWeightsFollowMode) {
  SolverParams p;
  p.alpha = 3;
  p.lambda = 7;
  EXPECT_EQ(p.effective_alpha(AblationMode::Baseline), 0);
  EXPECT_EQ(p.effective_lambda(AblationMode::Baseline), 0);
  EXPECT_EQ(p.effective_alpha(AblationMode::AddConnectivity), 0);
  EXPECT_EQ(p.effective_lambda(AblationMode::AddConnectivity), 7);
  EXPECT_EQ(p.effective_alpha(AblationMode::AddSaliencyMap), 3);
  EXPECT_EQ(p.effective_lambda(AblationMode::AddSaliencyMap), 7);
}

TEST(SolverParams, Validation) {
  SolverParams p;
  EXPECT_NO_THROW(p.validate());
  for (auto mutate : std::vector<std::function<void(SolverParams&)>>{
           [](SolverParams& q) { q.beta = 0; }, [](SolverParams& q) { q.alpha = -1; },
           [](SolverParams& q) { q.lambda = -1; }, [](SolverParams& q) { q.mu0 = 0; },
           [](SolverParams& q) { q.a = 1; }, [](SolverParams& q) { q.t = 1; }, [](SolverParams& q) { q.t = 0; },
           [](SolverParams& q) { q.m = 0; }, [](SolverParams& q) { q.outer_iters = 0; },
           [](SolverParams& q) { q.cg_tol = 0; }}) {
    SolverParams q;
    mutate(q);
    EXPECT_THROW(q.validate(), Error);
  }
}

TEST(SoftThreshold, Branches) {
  EXPECT_EQ(soft_threshold(3.0, 1.0), 2.0);
  EXPECT_EQ(soft_threshold(-3.0, 1.0), -2.0);
  EXPECT_EQ(soft_threshold(1.0, 1.0), 0.0);
  EXPECT_EQ(soft_threshold(-1.0, 1.0), 0.0);
  EXPECT_EQ(soft_threshold(0.5, 0.0), 0.5);
}

TEST(SoftThreshold, MatchesPiecewiseDefinition) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> x(-10, 10);
  std::uniform_real_distribution<double> e(0, 5);
  for (int i = 0; i < 1000000; ++i) {
    const double xi = x(rng);
    const double ei = e(rng);
    ASSERT_EQ(soft_threshold(xi, ei), oracle::soft(xi, ei));
  }
}

TEST(BStep, WorkedExamples) {
  SolverParams p;
  p.beta = 1;
  p.alpha = 1;
  const auto s = single_pixel_state(0.5, 0.0, 2.0);
  const Eigen::VectorXd sq = Eigen::VectorXd::Constant(1, 0.04);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  EXPECT_NEAR(b_step_unclamped(s, sq, one, p, AblationMode::AddSaliencyMap)[0], 0.99, 1e-15);
  EXPECT_NEAR(b_step(s, sq, one, p, AblationMode::AddSaliencyMap)[0], 0.99, 1e-15);
  EXPECT_NEAR(b_step_unclamped(s, sq, zero, p, AblationMode::AddSaliencyMap)[0], 1.49, 1e-15);
  EXPECT_EQ(b_step(s, sq, zero, p, AblationMode::AddSaliencyMap)[0], 1.0);
  const Eigen::VectorXd big = Eigen::VectorXd::Constant(1, 100.0);
  // (1 + 1 - 100 / 2) / 2
  EXPECT_NEAR(b_step_unclamped(s, big, one, p, AblationMode::AddSaliencyMap)[0], -24.0, 1e-12);
  EXPECT_EQ(b_step(s, big, one, p, AblationMode::AddSaliencyMap)[0], 0.0);
}

TEST(BStep, SaliencyIgnoredOutsideSaliencyMode) {
  SolverParams p;
  p.beta = 1;
  p.alpha = 1;
  const auto s = single_pixel_state(0.5, 0.0, 2.0);
  const Eigen::VectorXd sq = Eigen::VectorXd::Constant(1, 0.04);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  EXPECT_NEAR(b_step_unclamped(s, sq, zero, p, AblationMode::AddConnectivity)[0], 0.99, 1e-15);
}

TEST(BStep, SubspaceOverloadMatches) {
  std::mt19937_64 rng(4);
  SubspaceState<double> sub;
  sub.basis = oracle::random_orthonormal(9, 2, rng);
  sub.coeffs = oracle::random_vector(2, rng);
  const Eigen::VectorXd o = oracle::random_vector(9, rng);
  const Eigen::VectorXd sal = oracle::random_vector(9, rng, 0, 1);
  const auto st = random_solver_state(9, rng);
  SolverParams p;
  p.alpha = 0.3;
  const Eigen::VectorXd sq = (sub.basis * sub.coeffs - o).cwiseAbs2();
  EXPECT_LT((b_step(st, sub, o, sal, p, AblationMode::AddSaliencyMap) -
             b_step(st, sq, sal, p, AblationMode::AddSaliencyMap))
                .norm(),
            1e-15);
}

TEST(CStep, MatchesDenseOracle) {
  std::mt19937_64 rng(5);
  const int w = 4, h = 3;
  DifferenceOperator<> diff(ImageGrid(w, h));
  const Eigen::MatrixXd d = oracle::dense_difference(w, h);
  SolverParams p;
  p.lambda = 0.7;
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_solver_state(w * h, rng);
    const Eigen::VectorXd z = d * s.w - s.y / s.mu;
    const Eigen::VectorXd c = c_step(s, diff, p, AblationMode::AddConnectivity);
    for (int i = 0; i < z.size(); ++i) EXPECT_EQ(c[i], oracle::soft(z[i], p.lambda / s.mu));
    const Eigen::VectorXd c0 = c_step(s, diff, p, AblationMode::Baseline);
    EXPECT_LT((c0 - z).norm(), 1e-15);
  }
}

TEST(WStep, MatchesDenseSolve) {
  std::mt19937_64 rng(6);
  SolverParams p;
  p.cg_tol = 1e-12;
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + trial % 4;
    const int h = 1 + (trial / 4) % 4;
    DifferenceOperator<> diff(ImageGrid(w, h));
    const Eigen::MatrixXd d = oracle::dense_difference(w, h);
    const auto s = random_solver_state(w * h, rng);
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(w * h, w * h) + d.transpose() * d;
    const Eigen::VectorXd rhs = d.transpose() * (s.c + s.y / s.mu) + s.b - s.x / s.mu;
    const Eigen::VectorXd expected = a.ldlt().solve(rhs);
    const auto got = w_step(s, diff, p);
    EXPECT_LE((got.solution - expected).norm(), 1e-8 * std::max(1e-300, expected.norm()));
  }
}

TEST(WStep, SinglePixel) {
  DifferenceOperator<> diff(ImageGrid(1, 1));
  auto s = single_pixel_state(0.2, 0.6, 3.0);
  s.b[0] = 0.9;
  EXPECT_NEAR(w_step(s, diff, SolverParams{}).solution[0], 0.9 - 0.6 / 3.0, 1e-14);
}

TEST(DualStep, NoViolationOnlyGrowsPenalty) {
  std::mt19937_64 rng(7);
  DifferenceOperator<> diff(ImageGrid(3, 2));
  auto s = random_solver_state(6, rng);
  s.w = s.b;
  s.c = diff.apply(s.w);
  const auto x0 = s.x, y0 = s.y;
  const double mu0 = s.mu;
  dual_step(s, diff, SolverParams{});
  EXPECT_EQ(s.x, x0);
  EXPECT_EQ(s.y, y0);
  EXPECT_DOUBLE_EQ(s.mu, 1.25 * mu0);
}

TEST(DualStep, WorkedExamples) {
  DifferenceOperator<> diff(ImageGrid(3, 1));
  SolverState<double> s;
  s.b = Eigen::VectorXd::Zero(3);
  s.w = Eigen::VectorXd::Constant(3, 0.5);
  s.c = diff.apply(s.w);
  s.x = Eigen::VectorXd::Zero(3);
  s.y = Eigen::VectorXd::Zero(6);
  s.mu = 2;
  dual_step(s, diff, SolverParams{});
  EXPECT_EQ(s.x, Eigen::VectorXd::Constant(3, 1.0));

  s.mu = 0.1;
  for (int i = 0; i < 3; ++i) dual_step(s, diff, SolverParams{});
  EXPECT_NEAR(s.mu, 0.1953125, 1e-15);
}

TEST(Objective, ZeroBackgroundIsSparsityOnly) {
  std::mt19937_64 rng(8);
  const ImageGrid grid(3, 3);
  DifferenceOperator<> diff(grid);
  SubspaceState<double> sub;
  sub.basis = oracle::random_orthonormal(9, 2, rng);
  sub.coeffs = oracle::random_vector(2, rng);
  SolverParams p;
  p.beta = 2.5;
  p.alpha = 1.5;
  p.lambda = 4;
  const double value = objective(Eigen::VectorXd::Zero(9), sub, oracle::random_vector(9, rng),
                                 oracle::random_vector(9, rng, 0, 1), p, AblationMode::AddSaliencyMap, diff);
  EXPECT_NEAR(value, 9 * 2.5, 1e-12);
}

TEST(Objective, PerfectFitVanishes) {
  std::mt19937_64 rng(8);
  DifferenceOperator<> diff(ImageGrid(3, 3));
  SubspaceState<double> sub;
  sub.basis = oracle::random_orthonormal(9, 2, rng);
  sub.coeffs = oracle::random_vector(2, rng);
  SolverParams p;
  p.alpha = 1;
  p.lambda = 3;
  EXPECT_NEAR(objective(Eigen::VectorXd::Ones(9), sub, sub.reconstruction(), Eigen::VectorXd::Ones(9), p,
                        AblationMode::AddSaliencyMap, diff),
              0.0, 1e-12);
}

TEST(Objective, MatchesTermByTermOracle) {
  std::mt19937_64 rng(10);
  const int w = 4, h = 3, n = 12;
  DifferenceOperator<> diff(ImageGrid(w, h));
  const Eigen::MatrixXd d = oracle::dense_difference(w, h);
  for (int trial = 0; trial < 100; ++trial) {
    SubspaceState<double> sub;
    sub.basis = oracle::random_orthonormal(n, 3, rng);
    sub.coeffs = oracle::random_vector(3, rng, -5, 5);
    const Eigen::VectorXd o = oracle::random_vector(n, rng, -5, 5);
    const Eigen::VectorXd s = oracle::random_vector(n, rng, 0, 1);
    const Eigen::VectorXd b = oracle::random_vector(n, rng, 0, 1);
    SolverParams p;
    p.alpha = 0.8;
    p.beta = 1.7;
    p.lambda = 0.9;
    double expected = 0;
    for (int i = 0; i < n; ++i) {
      const double r = sub.basis.row(i).dot(sub.coeffs) - o[i];
      expected += 0.5 * b[i] * r * r + p.beta * (1 - b[i]) - p.alpha * b[i] * (1 - s[i]);
    }
    const Eigen::VectorXd db = d * b;
    for (int k = 0; k < db.size(); ++k) expected += p.lambda * std::abs(db[k]);
    EXPECT_NEAR(objective(b, sub, o, s, p, AblationMode::AddSaliencyMap, diff), expected,
                1e-10 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Binarize, Branches) {
  Eigen::VectorXd b(2);
  b << 0.9, 0.1;
  const auto mask = binarize(b, 0.5, ImageGrid(2, 1));
  EXPECT_EQ(mask.values[0], 0);
  EXPECT_EQ(mask.values[1], 1);
  EXPECT_THROW(binarize(b, 0.0, ImageGrid(2, 1)), Error);
  EXPECT_THROW(binarize(b, 1.0, ImageGrid(2, 1)), Error);
  EXPECT_THROW(binarize(b, 0.5, ImageGrid(3, 1)), Error);
}

TEST(Binarize, RaisingThresholdNeverRemovesForeground) {
  std::mt19937_64 rng(12);
  const Eigen::VectorXd b = oracle::random_vector(100, rng, 0, 1);
  const ImageGrid grid(10, 10);
  auto previous = binarize(b, 0.01, grid);
  for (double t = 0.02; t < 1.0; t += 0.01) {
    const auto mask = binarize(b, t, grid);
    for (int i = 0; i < 100; ++i) EXPECT_GE(mask.values[i], previous.values[i]);
    previous = mask;
  }
}

TEST(ProcessFrame, ConstantFrameInSpanStaysBackground) {
  const ImageGrid grid(8, 8);
  DifferenceOperator<> diff(grid);
  SubspaceState<double> sub;
  sub.basis = Eigen::MatrixXd::Constant(64, 1, 1.0 / 8.0);
  sub.coeffs = Eigen::VectorXd::Zero(1);
  const FrameVector frame{grid, Eigen::VectorXd::Constant(64, 120.0)};
  SolverParams p;
  p.beta = 10;
  p.lambda = 50;
  const auto [result, next] = process_frame(sub, frame, SaliencyVector::zeros(grid), p,
                                            AblationMode::AddConnectivity, diff);
  EXPECT_EQ(result.mask.values.cast<int>().sum(), 0);
  EXPECT_EQ(result.objective_trace.size(), 10u);
  EXPECT_TRUE(result.converged);
  EXPECT_LT(next.orthonormality_error(), 1e-12);
}

TEST(ProcessFrame, RejectsMismatchedInputs) {
  const ImageGrid grid(4, 4);
  DifferenceOperator<> diff(grid);
  SubspaceState<double> sub;
  sub.basis = Eigen::MatrixXd::Identity(16, 1);
  sub.coeffs = Eigen::VectorXd::Zero(1);
  const FrameVector frame{grid, Eigen::VectorXd::Zero(16)};
  EXPECT_THROW(process_frame(sub, frame, SaliencyVector::zeros(ImageGrid(3, 3)), SolverParams{},
                             AblationMode::Baseline, diff),
               Error);
  SolverParams bad;
  bad.t = 2;
  EXPECT_THROW(process_frame(sub, frame, SaliencyVector::zeros(grid), bad, AblationMode::Baseline, diff), Error);
}

}  // namespace
}  // namespace modsm
