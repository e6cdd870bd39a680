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

#include <Eigen/Core>

#include "modsm/error.hpp"
#include "modsm/image_io.hpp"

namespace modsm {

/// Raised when the smoothing solve hits its iteration cap.
class SolverDidNotConverge : public Error {
 public:
  SolverDidNotConverge(double residual, int iterations)
      : Error("smoothing solve stopped after " + std::to_string(iterations) +
              " iterations with relative residual " + std::to_string(residual)),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

template <typename Scalar>
struct SmoothingSolve {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solution;
  int iterations = 0;
  Scalar relative_residual = 0;
};

/**
 * Anisotropic first-difference operator D : R^N -> R^2N over an image grid.
 *
 * Rows 0..N-1 hold forward horizontal differences u(r, c+1) - u(r, c), rows
 * N..2N-1 forward vertical differences u(r+1, c) - u(r, c). Rows belonging to
 * the last column (resp. last row) are zero, so D annihilates constants and
 * D^T D is the 4-neighbour graph Laplacian.
 *
 * Never materialised; every product is a stencil sweep.
 */
template <typename Scalar = double>
class DifferenceOperator {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit DifferenceOperator(const ImageGrid& grid) : grid_(grid) {}

  const ImageGrid& grid() const { return grid_; }
  Eigen::Index pixels() const { return static_cast<Eigen::Index>(grid_.size()); }

  template <typename Derived>
  Vector apply(const Eigen::MatrixBase<Derived>& u) const {
    const Eigen::Index n = pixels();
    MODSM_REQUIRE(u.size() == n, "difference operator: input length must equal N");
    const Eigen::Index w = static_cast<Eigen::Index>(grid_.width);
    const Eigen::Index h = static_cast<Eigen::Index>(grid_.height);
    Vector out = Vector::Zero(2 * n);
    for (Eigen::Index r = 0; r < h; ++r) {
      for (Eigen::Index c = 0; c < w; ++c) {
        const Eigen::Index k = r * w + c;
        if (c + 1 < w) out[k] = u[k + 1] - u[k];
        if (r + 1 < h) out[n + k] = u[k + w] - u[k];
      }
    }
    return out;
  }

  template <typename Derived>
  Vector apply_transpose(const Eigen::MatrixBase<Derived>& z) const {
    const Eigen::Index n = pixels();
    MODSM_REQUIRE(z.size() == 2 * n, "difference operator: transpose input length must equal 2N");
    const Eigen::Index w = static_cast<Eigen::Index>(grid_.width);
    const Eigen::Index h = static_cast<Eigen::Index>(grid_.height);
    Vector out = Vector::Zero(n);
    for (Eigen::Index r = 0; r < h; ++r) {
      for (Eigen::Index c = 0; c < w; ++c) {
        const Eigen::Index k = r * w + c;
        if (c + 1 < w) {
          out[k + 1] += z[k];
          out[k] -= z[k];
        }
        if (r + 1 < h) {
          out[k + w] += z[n + k];
          out[k] -= z[n + k];
        }
      }
    }
    return out;
  }

  /// (I + D^T D) u, evaluated as u plus the 4-neighbour Laplacian.
  template <typename Derived>
  Vector apply_normal(const Eigen::MatrixBase<Derived>& u) const {
    const Eigen::Index w = static_cast<Eigen::Index>(grid_.width);
    const Eigen::Index h = static_cast<Eigen::Index>(grid_.height);
    Vector out(pixels());
    for (Eigen::Index r = 0; r < h; ++r) {
      for (Eigen::Index c = 0; c < w; ++c) {
        const Eigen::Index k = r * w + c;
        Scalar acc = u[k];
        if (c > 0) acc += u[k] - u[k - 1];
        if (c + 1 < w) acc += u[k] - u[k + 1];
        if (r > 0) acc += u[k] - u[k - w];
        if (r + 1 < h) acc += u[k] - u[k + w];
        out[k] = acc;
      }
    }
    return out;
  }

  /// Diagonal of I + D^T D: one plus the neighbour count of each pixel.
  Vector normal_diagonal() const {
    const Eigen::Index w = static_cast<Eigen::Index>(grid_.width);
    const Eigen::Index h = static_cast<Eigen::Index>(grid_.height);
    Vector d(pixels());
    for (Eigen::Index r = 0; r < h; ++r)
      for (Eigen::Index c = 0; c < w; ++c)
        d[r * w + c] = Scalar(1) + Scalar((c > 0) + (c + 1 < w) + (r > 0) + (r + 1 < h));
    return d;
  }

  int iteration_cap() const {
    return std::max(10, static_cast<int>(std::ceil(10.0 * std::sqrt(static_cast<double>(pixels())))));
  }

  /**
   * Solves (I + D^T D) w = rhs by Jacobi-preconditioned conjugate gradients.
   *
   * Stops once ||(I + D^T D) w - rhs|| <= tol * max(1, ||rhs||). `warm_start`
   * may be empty. Throws SolverDidNotConverge at the iteration cap.
   */
  template <typename Derived>
  SmoothingSolve<Scalar> solve_smoothing_system(const Eigen::MatrixBase<Derived>& rhs, Scalar tol,
                                                const Vector& warm_start = Vector()) const {
    const Eigen::Index n = pixels();
    MODSM_REQUIRE(rhs.size() == n, "smoothing solve: rhs length must equal N");
    MODSM_REQUIRE(tol > 0, "smoothing solve: tolerance must be positive");

    const Scalar scale = std::max(Scalar(1), rhs.norm());
    const Scalar target = tol * scale;
    const Vector inv_diag = normal_diagonal().cwiseInverse();

    SmoothingSolve<Scalar> result;
    result.solution = warm_start.size() == n ? warm_start : Vector::Zero(n);
    Vector residual = rhs - apply_normal(result.solution);
    Scalar rnorm = residual.norm();
    if (rnorm <= target) {
      result.relative_residual = rnorm / scale;
      return result;
    }

    Vector z = inv_diag.cwiseProduct(residual);
    Vector p = z;
    Scalar rz = residual.dot(z);
    const int cap = iteration_cap();
    for (int it = 1; it <= cap; ++it) {
      const Vector q = apply_normal(p);
      const Scalar step = rz / p.dot(q);
      result.solution.noalias() += step * p;
      residual.noalias() -= step * q;
      rnorm = residual.norm();
      result.iterations = it;
      if (rnorm <= target) {
        result.relative_residual = rnorm / scale;
        return result;
      }
      z = inv_diag.cwiseProduct(residual);
      const Scalar rz_next = residual.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    throw SolverDidNotConverge(static_cast<double>(rnorm / scale), cap);
  }

 private:
  ImageGrid grid_;
};

}  // namespace modsm
