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

#include "modsm/optimizer.hpp"

#include <cmath>

namespace modsm {

std::string_view to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::Baseline:
      return "baseline";
    case AblationMode::AddConnectivity:
      return "connectivity";
    case AblationMode::AddSaliencyMap:
      return "saliency";
  }
  return "unknown";
}

AblationMode parse_ablation_mode(std::string_view text) {
  if (text == "baseline") return AblationMode::Baseline;
  if (text == "connectivity") return AblationMode::AddConnectivity;
  if (text == "saliency") return AblationMode::AddSaliencyMap;
  throw Error("unknown mode '" + std::string(text) + "' (expected baseline|connectivity|saliency)");
}

void SolverParams::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  MODSM_REQUIRE(m >= 1, "m must be at least 1");
  MODSM_REQUIRE(finite(alpha) && alpha >= 0, "alpha must be >= 0");
  MODSM_REQUIRE(finite(beta) && beta > 0, "beta must be > 0");
  MODSM_REQUIRE(finite(lambda) && lambda >= 0, "lambda must be >= 0");
  MODSM_REQUIRE(finite(mu0) && mu0 > 0, "mu0 must be > 0");
  MODSM_REQUIRE(finite(a) && a > 1, "a must be > 1");
  MODSM_REQUIRE(t > 0 && t < 1, "t must lie in (0,1)");
  MODSM_REQUIRE(finite(eta) && eta >= 0, "eta must be >= 0");
  MODSM_REQUIRE(outer_iters >= 1, "outer_iters must be at least 1");
  MODSM_REQUIRE(admm_inner_iters >= 1, "admm_inner_iters must be at least 1");
  MODSM_REQUIRE(u_inner_iters >= 0, "u_inner_iters must be >= 0");
  MODSM_REQUIRE(finite(cg_tol) && cg_tol > 0, "cg_tol must be > 0");
}

}  // namespace modsm
