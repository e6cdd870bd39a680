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

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "modsm/difference_operator.hpp"
#include "modsm/error.hpp"
#include "modsm/image_io.hpp"
#include "modsm/subspace.hpp"

namespace modsm {

enum class AblationMode { Baseline, AddConnectivity, AddSaliencyMap };

std::string_view to_string(AblationMode mode);
/// Accepts "baseline", "connectivity" and "saliency".
AblationMode parse_ablation_mode(std::string_view text);

inline bool uses_saliency(AblationMode mode) { return mode == AblationMode::AddSaliencyMap; }

struct SolverParams {
  int m = 5;
  double alpha = 0.0;
  double beta = 1.0;
  double lambda = 5.0;
  double mu0 = 0.1;
  double a = 1.25;
  double t = 0.5;
  double eta = 1e-11;
  int outer_iters = 10;
  int admm_inner_iters = 8;
  int u_inner_iters = 3;
  double cg_tol = 1e-8;

  /// Throws on any out-of-range field.
  void validate() const;

  double effective_alpha(AblationMode mode) const { return uses_saliency(mode) ? alpha : 0.0; }
  double effective_lambda(AblationMode mode) const { return mode == AblationMode::Baseline ? 0.0 : lambda; }
};

/// Split variables of one frame's augmented Lagrangian.
template <typename Scalar = double>
struct SolverState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector b;  // background score, kept in [0,1]
  Vector c;  // copy of D w
  Vector w;  // copy of b
  Vector x;  // dual for w = b
  Vector y;  // dual for c = D w
  Scalar mu = Scalar(0.1);

  /// w = b, c = D b, zero duals.
  static SolverState start(const Vector& b0, const DifferenceOperator<Scalar>& diff, Scalar mu0) {
    SolverState s;
    s.b = b0;
    s.w = b0;
    s.c = diff.apply(b0);
    s.x = Vector::Zero(b0.size());
    s.y = Vector::Zero(2 * b0.size());
    s.mu = mu0;
    return s;
  }
};

template <typename Scalar>
Scalar soft_threshold(Scalar value, Scalar eps) {
  if (value > eps) return value - eps;
  if (value < -eps) return value + eps;
  return Scalar(0);
}

/**
 * Unclamped b-step: the stationary point of the augmented Lagrangian in b,
 *
 *   b_i = [beta + mu w_i + x_i - (U_i v - o_i)^2 / 2 + alpha (1 - s_i)] / mu.
 *
 * `squared_residual` holds (U_i v - o_i)^2. Alpha is the mode's effective value.
 */
template <typename Scalar, typename DerivedR, typename DerivedS>
typename SolverState<Scalar>::Vector b_step_unclamped(const SolverState<Scalar>& state,
                                                      const Eigen::MatrixBase<DerivedR>& squared_residual,
                                                      const Eigen::MatrixBase<DerivedS>& saliency,
                                                      const SolverParams& params, AblationMode mode) {
  MODSM_REQUIRE(state.mu > 0, "b-step requires a positive penalty");
  MODSM_REQUIRE(squared_residual.size() == state.w.size() && saliency.size() == state.w.size(),
                "b-step: dimension mismatch");
  const Scalar beta = static_cast<Scalar>(params.beta);
  const Scalar alpha = static_cast<Scalar>(params.effective_alpha(mode));
  return ((beta + state.mu * state.w.array() + state.x.array() - Scalar(0.5) * squared_residual.array() +
           alpha * (Scalar(1) - saliency.array())) /
          state.mu)
      .matrix();
}

/// b-step clamped into [0,1].
template <typename Scalar, typename DerivedR, typename DerivedS>
typename SolverState<Scalar>::Vector b_step(const SolverState<Scalar>& state,
                                            const Eigen::MatrixBase<DerivedR>& squared_residual,
                                            const Eigen::MatrixBase<DerivedS>& saliency, const SolverParams& params,
                                            AblationMode mode) {
  return b_step_unclamped(state, squared_residual, saliency, params, mode).cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
}

template <typename Scalar, typename DerivedO, typename DerivedS>
typename SolverState<Scalar>::Vector b_step(const SolverState<Scalar>& state, const SubspaceState<Scalar>& subspace,
                                            const Eigen::MatrixBase<DerivedO>& frame,
                                            const Eigen::MatrixBase<DerivedS>& saliency, const SolverParams& params,
                                            AblationMode mode) {
  const auto sq = (subspace.reconstruction() - frame).cwiseAbs2().eval();
  return b_step(state, sq, saliency, params, mode);
}

/// c = S_{lambda/mu}(D w - y / mu), element-wise.
template <typename Scalar>
typename SolverState<Scalar>::Vector c_step(const SolverState<Scalar>& state, const DifferenceOperator<Scalar>& diff,
                                            const SolverParams& params, AblationMode mode) {
  MODSM_REQUIRE(state.mu > 0, "c-step requires a positive penalty");
  const Scalar eps = static_cast<Scalar>(params.effective_lambda(mode)) / state.mu;
  return (diff.apply(state.w) - state.y / state.mu).unaryExpr([eps](Scalar z) { return soft_threshold(z, eps); });
}

/// w = (I + D^T D)^{-1} [D^T (c + y / mu) + b - x / mu], warm-started at the current w.
template <typename Scalar>
SmoothingSolve<Scalar> w_step(const SolverState<Scalar>& state, const DifferenceOperator<Scalar>& diff,
                              const SolverParams& params) {
  MODSM_REQUIRE(state.mu > 0, "w-step requires a positive penalty");
  const auto rhs = (diff.apply_transpose(state.c + state.y / state.mu) + state.b - state.x / state.mu).eval();
  return diff.solve_smoothing_system(rhs, static_cast<Scalar>(params.cg_tol), state.w);
}

/// x += mu (w - b); y += mu (c - D w); mu *= a. Both duals use the old mu.
template <typename Scalar>
void dual_step(SolverState<Scalar>& state, const DifferenceOperator<Scalar>& diff, const SolverParams& params) {
  MODSM_REQUIRE(state.mu > 0, "dual step requires a positive penalty");
  state.x.noalias() += state.mu * (state.w - state.b);
  state.y.noalias() += state.mu * (state.c - diff.apply(state.w));
  state.mu *= static_cast<Scalar>(params.a);
}

/**
 * Detection objective at the given b, with the total-variation term taken on
 * b directly:
 *
 *   sum_i [ b_i (U_i v - o_i)^2 / 2 + beta (1 - b_i) - alpha b_i (1 - s_i) ] + lambda ||D b||_1
 *
 * Baseline drops the last two terms, AddConnectivity only the saliency term.
 */
template <typename Scalar, typename DerivedB, typename DerivedO, typename DerivedS>
Scalar objective(const Eigen::MatrixBase<DerivedB>& b, const SubspaceState<Scalar>& subspace,
                 const Eigen::MatrixBase<DerivedO>& frame, const Eigen::MatrixBase<DerivedS>& saliency,
                 const SolverParams& params, AblationMode mode, const DifferenceOperator<Scalar>& diff) {
  const Scalar beta = static_cast<Scalar>(params.beta);
  const Scalar alpha = static_cast<Scalar>(params.effective_alpha(mode));
  const Scalar lambda = static_cast<Scalar>(params.effective_lambda(mode));
  const auto sq = (subspace.reconstruction() - frame).cwiseAbs2().eval();
  Scalar value = Scalar(0.5) * b.dot(sq) + beta * (Scalar(1) - b.array()).sum();
  if (alpha != 0) value -= alpha * b.dot((Scalar(1) - saliency.array()).matrix());
  if (lambda != 0) value += lambda * diff.apply(b).template lpNorm<1>();
  return value;
}

/// f_i = 1 iff b_i < t.
template <typename Derived>
ForegroundMask binarize(const Eigen::MatrixBase<Derived>& b, double t, const ImageGrid& grid) {
  MODSM_REQUIRE(t > 0 && t < 1, "threshold must lie in (0,1)");
  MODSM_REQUIRE(static_cast<std::size_t>(b.size()) == grid.size(), "binarize: length does not match grid");
  ForegroundMask mask{grid, MaskVector(b.size())};
  for (Eigen::Index i = 0; i < b.size(); ++i) mask.values[i] = static_cast<double>(b[i]) < t ? 1 : 0;
  return mask;
}

/// Relative change |L_k - L_{k-1}| / max(1, |L_1|) used to judge stabilisation.
inline double relative_objective_change(const std::vector<double>& trace, std::size_t k) {
  const double scale = std::max(1.0, std::abs(trace.front()));
  return std::abs(trace[k] - trace[k - 1]) / scale;
}

inline constexpr double kObjectiveStableTol = 1e-3;

template <typename Scalar = double>
struct FrameResult {
  ForegroundMask mask;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b;
  std::vector<double> objective_trace;
  bool converged = false;
  double primal_gap_wb = 0;  // ||w - b|| at the end of the frame
  double primal_gap_cdw = 0; // ||c - D w|| at the end of the frame
  int cg_iterations = 0;
};

/**
 * Runs the alternating minimisation on one frame.
 *
 * Each outer iteration performs `admm_inner_iters` rounds of
 * {b, c, w, duals}, then `u_inner_iters` Grassmannian steps with v held, then
 * refits v on the b-weighted frame; the objective is recorded after every
 * outer iteration. The penalty restarts at mu0 and the duals at zero; b starts
 * from `warm_b` (all ones when empty).
 *
 * Returns the frame result and the updated subspace.
 */
template <typename Scalar = double>
std::pair<FrameResult<Scalar>, SubspaceState<Scalar>> process_frame(
    const SubspaceState<Scalar>& subspace, const FrameVector& frame, const SaliencyVector& saliency,
    const SolverParams& params, AblationMode mode, const DifferenceOperator<Scalar>& diff,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& warm_b = {}) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  params.validate();
  const Eigen::Index n = subspace.pixels();
  MODSM_REQUIRE(frame.values.size() == n && diff.pixels() == n, "process_frame: frame does not match subspace");
  MODSM_REQUIRE(saliency.values.size() == n, "process_frame: saliency does not match frame");

  const Vector o = frame.values.template cast<Scalar>();
  const Vector s = saliency.values.template cast<Scalar>();

  SubspaceState<Scalar> sub = subspace;
  sub.eta = static_cast<Scalar>(params.eta);
  sub.coeffs = coefficients(sub, o);

  SolverState<Scalar> state =
      SolverState<Scalar>::start(warm_b.size() == n ? warm_b : Vector::Ones(n), diff, static_cast<Scalar>(params.mu0));

  FrameResult<Scalar> result;
  result.objective_trace.reserve(static_cast<std::size_t>(params.outer_iters));
  for (int k = 0; k < params.outer_iters; ++k) {
    const Vector sq = (sub.reconstruction() - o).cwiseAbs2();
    for (int j = 0; j < params.admm_inner_iters; ++j) {
      state.b = b_step(state, sq, s, params, mode);
      state.c = c_step(state, diff, params, mode);
      SmoothingSolve<Scalar> solve = w_step(state, diff, params);
      state.w = std::move(solve.solution);
      result.cg_iterations += solve.iterations;
      dual_step(state, diff, params);
    }
    for (int u = 0; u < params.u_inner_iters; ++u) sub = grassmann_update(sub, residual(sub, o, state.b));
    sub.coeffs = weighted_coefficients(sub, o, state.b);

    const double value = static_cast<double>(objective(state.b, sub, o, s, params, mode, diff));
    if (!std::isfinite(value))
      throw Error("non-finite objective at outer iteration " + std::to_string(k + 1));
    result.objective_trace.push_back(value);
  }

  const std::size_t last = result.objective_trace.size() - 1;
  result.converged = last == 0 || relative_objective_change(result.objective_trace, last) < kObjectiveStableTol;
  result.primal_gap_wb = static_cast<double>((state.w - state.b).norm());
  result.primal_gap_cdw = static_cast<double>((state.c - diff.apply(state.w)).norm());
  result.mask = binarize(state.b, params.t, frame.grid);
  result.b = std::move(state.b);
  return {std::move(result), std::move(sub)};
}

}  // namespace modsm
