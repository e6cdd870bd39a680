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

#include "modsm/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace modsm {

using nlohmann::json;

double residual_variance(const SubspaceState<double>& subspace, std::span<const FrameVector> training) {
  MODSM_REQUIRE(!training.empty(), "residual variance needs at least one training frame");
  double total = 0;
  for (const auto& frame : training) {
    MODSM_REQUIRE(frame.values.size() == subspace.pixels(), "training frame does not match subspace");
    const Eigen::VectorXd v = coefficients(subspace, frame.values);
    total += (subspace.basis * v - frame.values).squaredNorm();
  }
  const double pixels = static_cast<double>(subspace.pixels());
  return total / (2.0 * static_cast<double>(training.size()) * pixels);
}

std::pair<double, double> saliency_stats(std::span<const SaliencyVector> training_saliency) {
  MODSM_REQUIRE(!training_saliency.empty(), "saliency statistics need at least one map");
  double sum = 0;
  double samples = 0;
  for (const auto& s : training_saliency) {
    sum += s.values.sum();
    samples += static_cast<double>(s.values.size());
  }
  const double mean = sum / samples;
  double above = 0;
  for (const auto& s : training_saliency) above += static_cast<double>((s.values.array() > mean).count());
  return {mean, above / samples};
}

double alpha_rule(const TrainingStats& stats, double beta) {
  if (stats.s_m <= stats.s_M || stats.s_m == 0) return 6.5 * beta * stats.s_m;
  const double ratio = std::floor(stats.s_m / (stats.s_m - stats.s_M));
  return ratio * std::sqrt(stats.sigma_hat_sq) * stats.s_m * stats.intensity_range;
}

double update_beta(double current_beta, double sigma_hat_sq) {
  return std::max(0.5 * current_beta, 4.5 * sigma_hat_sq);
}

ParamDerivation derive_params(const TrainingStats& stats, const ParamOverrides& overrides) {
  MODSM_REQUIRE(stats.sigma_hat_sq >= 0, "residual variance must be non-negative");
  ParamDerivation out;
  SolverParams& p = out.params;

  p.beta = 4.5 * stats.sigma_hat_sq;
  if (p.beta <= 0 && !overrides.beta) {
    out.warning = "training residual variance is zero; beta floored at " + std::to_string(kBetaFloor);
    p.beta = kBetaFloor;
  }
  if (overrides.beta) p.beta = *overrides.beta;

  p.lambda = overrides.lambda.value_or(5.0 * p.beta);
  out.alpha_uncapped = alpha_rule(stats, p.beta);
  p.alpha = overrides.alpha.value_or(std::min(out.alpha_uncapped, 6.5 * p.beta));
  p.mu0 = overrides.mu0.value_or(0.1);
  p.a = overrides.a.value_or(1.25);
  p.m = overrides.m.value_or(5);
  p.t = overrides.t.value_or(p.t);
  p.eta = overrides.eta.value_or(p.eta);
  p.outer_iters = overrides.outer_iters.value_or(p.outer_iters);
  p.admm_inner_iters = overrides.admm_inner_iters.value_or(p.admm_inner_iters);
  p.u_inner_iters = overrides.u_inner_iters.value_or(p.u_inner_iters);
  p.cg_tol = overrides.cg_tol.value_or(p.cg_tol);
  return out;
}

namespace {

template <typename T>
void assign(std::optional<T>& slot, const json& value, const std::string& key) {
  if (value.is_string()) {
    const std::string text = value.get<std::string>();
    std::size_t used = 0;
    try {
      if constexpr (std::is_integral_v<T>) {
        slot = static_cast<T>(std::stol(text, &used));
      } else {
        slot = static_cast<T>(std::stod(text, &used));
      }
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size()) throw Error("bad value for parameter '" + key + "': " + text);
    return;
  }
  if (!value.is_number()) throw Error("parameter '" + key + "' must be numeric");
  slot = value.get<T>();
}

void assign_key(ParamOverrides& o, const std::string& key, const json& value) {
  if (key == "m") assign(o.m, value, key);
  else if (key == "alpha") assign(o.alpha, value, key);
  else if (key == "beta") assign(o.beta, value, key);
  else if (key == "lambda") assign(o.lambda, value, key);
  else if (key == "mu0" || key == "mu") assign(o.mu0, value, key);
  else if (key == "a") assign(o.a, value, key);
  else if (key == "t") assign(o.t, value, key);
  else if (key == "eta") assign(o.eta, value, key);
  else if (key == "outer_iters") assign(o.outer_iters, value, key);
  else if (key == "admm_inner_iters") assign(o.admm_inner_iters, value, key);
  else if (key == "u_inner_iters") assign(o.u_inner_iters, value, key);
  else if (key == "cg_tol") assign(o.cg_tol, value, key);
  else throw Error("unknown parameter '" + key + "'");
}

template <typename T>
void take(std::optional<T>& mine, const std::optional<T>& theirs) {
  if (theirs) mine = theirs;
}

}  // namespace

void ParamOverrides::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw Error("expected key=value, got '" + assignment + "'");
  assign_key(*this, assignment.substr(0, eq), json(assignment.substr(eq + 1)));
}

void ParamOverrides::merge(const json& object) {
  if (!object.is_object()) throw Error("parameter overrides must be a JSON object");
  for (const auto& [key, value] : object.items()) assign_key(*this, key, value);
}

ParamOverrides& ParamOverrides::operator|=(const ParamOverrides& later) {
  take(m, later.m);
  take(alpha, later.alpha);
  take(beta, later.beta);
  take(lambda, later.lambda);
  take(mu0, later.mu0);
  take(a, later.a);
  take(t, later.t);
  take(eta, later.eta);
  take(outer_iters, later.outer_iters);
  take(admm_inner_iters, later.admm_inner_iters);
  take(u_inner_iters, later.u_inner_iters);
  take(cg_tol, later.cg_tol);
  return *this;
}

json to_json(const SolverParams& p) {
  return json{{"m", p.m},
              {"alpha", p.alpha},
              {"beta", p.beta},
              {"lambda", p.lambda},
              {"mu0", p.mu0},
              {"a", p.a},
              {"t", p.t},
              {"eta", p.eta},
              {"outer_iters", p.outer_iters},
              {"admm_inner_iters", p.admm_inner_iters},
              {"u_inner_iters", p.u_inner_iters},
              {"cg_tol", p.cg_tol}};
}

SolverParams params_from_json(const json& object, SolverParams base) {
  ParamOverrides o;
  o.merge(object);
  if (o.m) base.m = *o.m;
  if (o.alpha) base.alpha = *o.alpha;
  if (o.beta) base.beta = *o.beta;
  if (o.lambda) base.lambda = *o.lambda;
  if (o.mu0) base.mu0 = *o.mu0;
  if (o.a) base.a = *o.a;
  if (o.t) base.t = *o.t;
  if (o.eta) base.eta = *o.eta;
  if (o.outer_iters) base.outer_iters = *o.outer_iters;
  if (o.admm_inner_iters) base.admm_inner_iters = *o.admm_inner_iters;
  if (o.u_inner_iters) base.u_inner_iters = *o.u_inner_iters;
  if (o.cg_tol) base.cg_tol = *o.cg_tol;
  return base;
}

void save_params(const std::filesystem::path& path, const SolverParams& params) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << to_json(params).dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

SolverParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json object;
  try {
    in >> object;
  } catch (const json::exception& e) {
    throw Error("malformed parameter file " + path.string() + ": " + e.what());
  }
  SolverParams p = params_from_json(object);
  p.validate();
  return p;
}

}  // namespace modsm
