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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "json.hpp"

#include "modsm/image_io.hpp"
#include "modsm/optimizer.hpp"
#include "modsm/subspace.hpp"

namespace modsm {

/// Statistics of the object-free training window.
struct TrainingStats {
  double sigma_hat_sq = 0;  // per-pixel reconstruction variance, halved
  double s_M = 0;           // grand mean saliency
  double s_m = 0;           // fraction of samples strictly above s_M
  std::size_t omega_size = 0;
  /// Full-scale intensity the frames were measured on (255 for 8-bit input,
  /// 1 for normalised data). The alpha rule reads sigma_hat in full-scale units.
  double intensity_range = 1.0;
};

/**
 * sigma^2 = 1 / (2 |Omega| N) * sum_o ||U U^T o - o||^2 over the training
 * frames: the mean squared reconstruction error per pixel, halved.
 */
double residual_variance(const SubspaceState<double>& subspace, std::span<const FrameVector> training);

/// (s_M, s_m). s_m counts strict exceedances of the mean.
std::pair<double, double> saliency_stats(std::span<const SaliencyVector> training_saliency);

/// Each engaged field replaces the derived value.
struct ParamOverrides {
  std::optional<int> m;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> lambda;
  std::optional<double> mu0;
  std::optional<double> a;
  std::optional<double> t;
  std::optional<double> eta;
  std::optional<int> outer_iters;
  std::optional<int> admm_inner_iters;
  std::optional<int> u_inner_iters;
  std::optional<double> cg_tol;

  /// Parses one "key=value" assignment; throws on unknown keys.
  void set(const std::string& assignment);
  /// Merges keys of a flat JSON object; later calls win.
  void merge(const nlohmann::json& object);
  ParamOverrides& operator|=(const ParamOverrides& later);
};

struct ParamDerivation {
  SolverParams params;
  /// alpha from the training statistics before the 6.5 beta cap; the stream
  /// re-applies the cap whenever beta moves.
  double alpha_uncapped = 0;
  std::optional<std::string> warning;
};

inline constexpr double kBetaFloor = 1e-6;

/**
 * Empirical parameter rule:
 *   beta   = 4.5 sigma^2          (floored at kBetaFloor)
 *   lambda = 5 beta
 *   alpha  = min(floor(s_m / (s_m - s_M)) sigma s_m R, 6.5 beta), R = intensity range,
 *            or 6.5 beta s_m when s_m <= s_M or s_m = 0
 *   mu0 = 0.1, a = 1.25, m = 5.
 */
ParamDerivation derive_params(const TrainingStats& stats, const ParamOverrides& overrides = {});

/// alpha from the saliency statistics, before the 6.5 beta cap.
double alpha_rule(const TrainingStats& stats, double beta);

/// max(beta / 2, 4.5 sigma^2).
double update_beta(double current_beta, double sigma_hat_sq);

nlohmann::json to_json(const SolverParams& params);
SolverParams params_from_json(const nlohmann::json& object, SolverParams base = {});

void save_params(const std::filesystem::path& path, const SolverParams& params);
SolverParams load_params(const std::filesystem::path& path);

}  // namespace modsm
