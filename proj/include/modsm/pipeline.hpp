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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "modsm/evaluation.hpp"
#include "modsm/image_io.hpp"
#include "modsm/optimizer.hpp"
#include "modsm/parameters.hpp"
#include "modsm/subspace.hpp"

namespace modsm {

/// Settings shared by `run` and `ablate`.
struct RunConfig {
  std::filesystem::path frames_dir;
  std::filesystem::path saliency_dir;  // may be empty outside saliency mode
  std::filesystem::path truth_dir;     // used by ablate
  std::filesystem::path output_dir;
  AblationMode mode = AblationMode::AddSaliencyMap;
  ParamOverrides overrides;
  std::size_t train_count = 20;
  std::uint64_t seed = 0;
  std::string pattern = "*";
  bool verbose = false;
};

/// A loaded video. `saliency` holds one map per frame (zeros when no
/// saliency is used); `truth` is empty or aligned with `frames`, with
/// std::nullopt where no ground-truth file exists.
struct Sequence {
  std::vector<std::string> names;  // file stems
  std::vector<FrameVector> frames;
  std::vector<SaliencyVector> saliency;
  std::vector<std::optional<ForegroundMask>> truth;

  std::size_t size() const { return frames.size(); }
};

/// Builds a Sequence from frames in `frames_dir`. Saliency and truth files
/// are paired by file stem; any readable extension is accepted. A missing
/// saliency file is an error; a missing truth file is not.
Sequence load_sequence(const std::filesystem::path& frames_dir, const std::string& pattern,
                       const std::optional<std::filesystem::path>& saliency_dir,
                       const std::optional<std::filesystem::path>& truth_dir);

/// Everything learned from the object-free training window.
struct TrainedModel {
  SubspaceState<double> subspace;
  TrainingStats stats;
  ParamDerivation derivation;
  std::size_t padded_columns = 0;
};

/// Initialises the subspace from the first `train_count` frames and derives
/// the parameters. Saliency statistics are taken on the full-scale intensity
/// range of 8-bit input.
TrainedModel train(const Sequence& seq, std::size_t train_count, const ParamOverrides& overrides,
                   std::uint64_t seed = 0);

struct StreamFrame {
  std::string name;
  ForegroundMask mask;
  Eigen::VectorXd b;
  std::vector<double> objective_trace;
  bool converged = false;
  SolverParams params;  // parameters in force for this frame
  double primal_gap_wb = 0;
  double primal_gap_cdw = 0;
  int cg_iterations = 0;
};

/// Exponential smoothing factor of the running residual variance.
inline constexpr double kVarianceSmoothing = 0.95;

/**
 * Streams frames [train_count, size) through the detector. b is warm-started
 * from the previous frame. After every frame the running residual variance
 * (b-weighted, smoothed) feeds update_beta; lambda and the alpha cap follow
 * beta unless overridden. Optional JSON-lines diagnostics go to `diagnostics`.
 */
std::vector<StreamFrame> run_stream(const Sequence& seq, std::size_t train_count, const TrainedModel& model,
                                    AblationMode mode, const ParamOverrides& overrides,
                                    std::ostream* diagnostics = nullptr);

/// Per-frame scores of a stream against the sequence's truth; frames
/// without truth are skipped.
std::vector<FrameScore> score_stream(const Sequence& seq, const std::vector<StreamFrame>& stream,
                                     const std::string& video);

/// Mean per-frame F1 and pooled counts.
struct StreamSummary {
  double mean_f1 = 0;
  ConfusionCounts total;
  std::size_t frames = 0;
};

StreamSummary summarize(const std::vector<FrameScore>& scores);

struct AblationRow {
  AblationMode mode;
  StreamSummary summary;
};

/// Runs all three modes on one shared training.
std::vector<AblationRow> ablate(const Sequence& seq, std::size_t train_count, const ParamOverrides& overrides,
                                std::uint64_t seed = 0);

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

/// Honors MODSM_THREADS; returns the width in use.
int configure_threads();

// Command entry points. Each returns a process exit code and reports errors
// on `err`.
int cmd_run(const RunConfig& config, std::ostream& log, std::ostream& err);
int cmd_evaluate(const std::filesystem::path& masks_dir, const std::filesystem::path& truth_dir,
                 const std::filesystem::path& out_csv, std::ostream& log, std::ostream& err);
int cmd_ablate(const RunConfig& config, const std::filesystem::path& out_csv, std::ostream& log, std::ostream& err);

}  // namespace modsm
