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

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <span>

#include <Eigen/Dense>

#include "modsm/error.hpp"
#include "modsm/image_io.hpp"

namespace modsm {

/// Orthonormal background basis U (N x m) and the coefficients v of the
/// current frame. Column orthonormality U^T U = I holds between updates.
template <typename Scalar = double>
struct SubspaceState {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix basis;
  Vector coeffs;
  Scalar eta = Scalar(1e-11);

  Eigen::Index pixels() const { return basis.rows(); }
  Eigen::Index dim() const { return basis.cols(); }

  Vector reconstruction() const { return basis * coeffs; }

  Scalar orthonormality_error() const {
    return (basis.transpose() * basis - Matrix::Identity(dim(), dim())).norm();
  }
};

template <typename Scalar>
struct SubspaceInit {
  SubspaceState<Scalar> state;
  /// Columns filled with random orthonormal complements because the
  /// training matrix had fewer than m significant singular values.
  int padded_columns = 0;
};

namespace detail {

/// Makes the largest-magnitude entry of every column positive.
template <typename Derived>
void fix_column_signs(const Eigen::MatrixBase<Derived>& u_) {
  auto& u = const_cast<Eigen::MatrixBase<Derived>&>(u_);
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index arg = 0;
    u.col(j).cwiseAbs().maxCoeff(&arg);
    if (u(arg, j) < 0) u.col(j) = -u.col(j);
  }
}

/// Thin QR with a positive R diagonal; returns the Q factor.
template <typename Matrix>
Matrix orthonormalize(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix r = qr.matrixQR().topRows(a.cols()).template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace detail

/**
 * Background basis from object-free training frames: the top-m left singular
 * vectors of the N x |training| matrix, sign-fixed, with v = U^T (last frame).
 *
 * Missing rank is padded with seeded random vectors orthogonalised against
 * the basis so far; the count is reported in SubspaceInit::padded_columns.
 */
template <typename Scalar = double>
SubspaceInit<Scalar> init_subspace(std::span<const FrameVector> training, Eigen::Index m,
                                   std::uint64_t seed = 0, Scalar eta = Scalar(1e-11)) {
  using Matrix = typename SubspaceState<Scalar>::Matrix;
  using Vector = typename SubspaceState<Scalar>::Vector;

  MODSM_REQUIRE(m >= 1, "subspace dimension must be at least 1");
  MODSM_REQUIRE(static_cast<Eigen::Index>(training.size()) >= m,
                "need at least m training frames to initialise the subspace");
  const Eigen::Index n = training.front().values.size();
  MODSM_REQUIRE(m <= n, "subspace dimension cannot exceed the pixel count");

  Matrix data(n, static_cast<Eigen::Index>(training.size()));
  for (std::size_t k = 0; k < training.size(); ++k) {
    MODSM_REQUIRE(training[k].grid == training.front().grid, "training frames must share one grid");
    data.col(static_cast<Eigen::Index>(k)) = training[k].values.template cast<Scalar>();
  }

  Eigen::BDCSVD<Matrix> svd(data, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  const Scalar tol = sv.size() > 0 && sv[0] > 0
                         ? std::numeric_limits<Scalar>::epsilon() * Scalar(std::max(data.rows(), data.cols())) * sv[0]
                         : Scalar(0);

  SubspaceInit<Scalar> out;
  Matrix u(n, m);
  Eigen::Index rank = 0;
  while (rank < m && rank < sv.size() && sv[rank] > tol) {
    u.col(rank) = svd.matrixU().col(rank);
    ++rank;
  }
  detail::fix_column_signs(u.leftCols(rank));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  for (Eigen::Index j = rank; j < m; ++j) {
    Vector candidate(n);
    for (;;) {
      for (Eigen::Index i = 0; i < n; ++i) candidate[i] = static_cast<Scalar>(gauss(rng));
      for (int pass = 0; pass < 2; ++pass)
        candidate -= u.leftCols(j) * (u.leftCols(j).transpose() * candidate);
      if (candidate.norm() > Scalar(1e-6)) break;
    }
    u.col(j) = candidate.normalized();
    ++out.padded_columns;
  }
  detail::fix_column_signs(u.rightCols(m - rank));

  out.state.basis = std::move(u);
  out.state.coeffs = out.state.basis.transpose() * training.back().values.template cast<Scalar>();
  out.state.eta = eta;
  return out;
}

/// v = U^T o.
template <typename Scalar, typename Derived>
typename SubspaceState<Scalar>::Vector coefficients(const SubspaceState<Scalar>& state,
                                                    const Eigen::MatrixBase<Derived>& frame) {
  MODSM_REQUIRE(frame.size() == state.pixels(), "frame length does not match subspace");
  return state.basis.transpose() * frame;
}

template <typename Scalar>
typename SubspaceState<Scalar>::Vector coefficients(const SubspaceState<Scalar>& state,
                                                    const FrameVector& frame) {
  return coefficients(state, frame.values.template cast<Scalar>());
}

/**
 * Coefficients minimising sum_i b_i (U_i v - o_i)^2, the v-subproblem of the
 * detection objective. A 1e-6 ridge toward U^T o keeps the m x m system
 * regular when b vanishes on most pixels; with b = 1 the result is U^T o.
 */
template <typename Scalar, typename DerivedO, typename DerivedB>
typename SubspaceState<Scalar>::Vector weighted_coefficients(const SubspaceState<Scalar>& state,
                                                             const Eigen::MatrixBase<DerivedO>& frame,
                                                             const Eigen::MatrixBase<DerivedB>& weights) {
  using Matrix = typename SubspaceState<Scalar>::Matrix;
  MODSM_REQUIRE(frame.size() == state.pixels() && weights.size() == state.pixels(),
                "weighted coefficients: dimension mismatch");
  constexpr Scalar ridge = Scalar(1e-6);
  const Matrix weighted = state.basis.array().colwise() * weights.array();
  Matrix gram = weighted.transpose() * state.basis;
  gram.diagonal().array() += ridge;
  const auto rhs = (weighted.transpose() * frame + ridge * (state.basis.transpose() * frame)).eval();
  return gram.ldlt().solve(rhs);
}

/// R = b .* (U v - o).
template <typename Scalar, typename DerivedO, typename DerivedB>
typename SubspaceState<Scalar>::Vector residual(const SubspaceState<Scalar>& state,
                                                const Eigen::MatrixBase<DerivedO>& frame,
                                                const Eigen::MatrixBase<DerivedB>& b) {
  MODSM_REQUIRE(frame.size() == state.pixels() && b.size() == state.pixels(),
                "residual: dimension mismatch");
  return b.cwiseProduct(state.basis * state.coeffs - frame);
}

/// L_f = 1/2 sum_i b_i (U_i v - o_i)^2.
template <typename Scalar, typename DerivedO, typename DerivedB>
Scalar reconstruction_loss(const SubspaceState<Scalar>& state, const Eigen::MatrixBase<DerivedO>& frame,
                           const Eigen::MatrixBase<DerivedB>& b) {
  const auto r = (state.basis * state.coeffs - frame).eval();
  return Scalar(0.5) * b.dot(r.cwiseAbs2());
}

/// dL_f/dU = R v^T.
template <typename Scalar, typename Derived>
typename SubspaceState<Scalar>::Matrix euclidean_gradient(const SubspaceState<Scalar>& state,
                                                          const Eigen::MatrixBase<Derived>& r) {
  MODSM_REQUIRE(r.size() == state.pixels(), "gradient: residual length mismatch");
  return r * state.coeffs.transpose();
}

/**
 * One geodesic step on the Grassmannian.
 *
 * The residual is first projected off span(U), R_perp = (I - U U^T) R, and
 * sigma = ||R_perp|| ||v|| is the norm of the manifold gradient. Then
 *
 *   U <- U + (cos(sigma eta) - 1) U v v^T / ||v||^2
 *          - sin(sigma eta) R_perp v^T / (||R_perp|| ||v||)
 *
 * followed by a sign-fixed QR to absorb round-off. A zero residual, zero
 * coefficients or zero step return the state untouched.
 */
template <typename Scalar, typename Derived>
SubspaceState<Scalar> grassmann_update(const SubspaceState<Scalar>& state, const Eigen::MatrixBase<Derived>& r) {
  using Vector = typename SubspaceState<Scalar>::Vector;
  MODSM_REQUIRE(r.size() == state.pixels(), "grassmann update: residual length mismatch");
  MODSM_REQUIRE(state.basis.allFinite() && state.coeffs.allFinite() && r.allFinite() && std::isfinite(state.eta),
                "grassmann update: non-finite input");

  const Vector projected = r - state.basis * (state.basis.transpose() * r);
  const Scalar rnorm = projected.norm();
  const Scalar vnorm = state.coeffs.norm();
  const Scalar theta = rnorm * vnorm * state.eta;
  if (rnorm == 0 || vnorm == 0 || theta == 0) return state;

  const Vector vhat = state.coeffs / vnorm;
  const Vector direction = (std::cos(theta) - Scalar(1)) * (state.basis * vhat) - std::sin(theta) * (projected / rnorm);

  SubspaceState<Scalar> next = state;
  next.basis.noalias() += direction * vhat.transpose();
  next.basis = detail::orthonormalize(next.basis);
  return next;
}

/// Basis file: u64 N, u64 m, then N*m little-endian doubles in row-major order.
template <typename Scalar>
void save_basis(const std::filesystem::path& path, const SubspaceState<Scalar>& state) {
  static_assert(std::endian::native == std::endian::little, "basis I/O assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(state.pixels()), static_cast<std::uint64_t>(state.dim())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (Eigen::Index i = 0; i < state.pixels(); ++i) {
    for (Eigen::Index j = 0; j < state.dim(); ++j) {
      const double value = static_cast<double>(state.basis(i, j));
      out.write(reinterpret_cast<const char*>(&value), sizeof(value));
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

template <typename Scalar = double>
typename SubspaceState<Scalar>::Matrix load_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::uint64_t dims[2] = {0, 0};
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || dims[0] == 0 || dims[1] == 0 || dims[1] > dims[0]) throw Error("malformed basis header in " + path.string());
  typename SubspaceState<Scalar>::Matrix basis(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  for (Eigen::Index i = 0; i < basis.rows(); ++i) {
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
      double value = 0;
      in.read(reinterpret_cast<char*>(&value), sizeof(value));
      basis(i, j) = static_cast<Scalar>(value);
    }
  }
  if (!in) throw Error("truncated basis file " + path.string());
  return basis;
}

}  // namespace modsm
