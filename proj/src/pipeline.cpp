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

#include "modsm/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include <Eigen/Core>

#include "modsm/difference_operator.hpp"

namespace modsm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool readable_image(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".png";
}

// stem -> path over readable images in `dir`. Duplicated stems are an error.
std::map<std::string, fs::path> index_by_stem(const fs::path& dir) {
  MODSM_REQUIRE(fs::is_directory(dir), "not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !readable_image(entry.path())) continue;
    const std::string stem = entry.path().stem().string();
    const auto [it, inserted] = out.emplace(stem, entry.path());
    MODSM_REQUIRE(inserted, "ambiguous files for '" + stem + "' in " + dir.string());
  }
  return out;
}

void require_dir(const fs::path& dir, const std::string& what) {
  MODSM_REQUIRE(!dir.empty(), what + " directory not given");
  MODSM_REQUIRE(fs::is_directory(dir), what + " directory does not exist: " + dir.string());
}

double weighted_residual_variance(const SubspaceState<double>& sub, const FrameVector& frame,
                                  const Eigen::VectorXd& b) {
  const double weight = b.sum();
  if (weight <= 0) return 0;
  return b.dot((sub.reconstruction() - frame.values).cwiseAbs2()) / (2.0 * weight);
}

std::vector<FrameVector> head(const Sequence& seq, std::size_t count) {
  return {seq.frames.begin(), seq.frames.begin() + static_cast<std::ptrdiff_t>(count)};
}

}  // namespace

Sequence load_sequence(const fs::path& frames_dir, const std::string& pattern,
                       const std::optional<fs::path>& saliency_dir, const std::optional<fs::path>& truth_dir) {
  require_dir(frames_dir, "frames");
  std::vector<fs::path> files = match_files(frames_dir, pattern);
  files.erase(std::remove_if(files.begin(), files.end(), [](const fs::path& p) { return !readable_image(p); }),
              files.end());

  Sequence seq;
  seq.frames = load_frame_sequence(files);
  for (const auto& f : files) seq.names.push_back(f.stem().string());
  const ImageGrid grid = seq.frames.front().grid;

  if (saliency_dir) {
    require_dir(*saliency_dir, "saliency");
    const auto index = index_by_stem(*saliency_dir);
    for (const auto& name : seq.names) {
      const auto it = index.find(name);
      MODSM_REQUIRE(it != index.end(), "no saliency map for frame '" + name + "' in " + saliency_dir->string());
      seq.saliency.push_back(load_saliency(it->second, grid));
    }
  } else {
    seq.saliency.assign(seq.size(), SaliencyVector::zeros(grid));
  }

  if (truth_dir) {
    require_dir(*truth_dir, "truth");
    const auto index = index_by_stem(*truth_dir);
    for (const auto& name : seq.names) {
      const auto it = index.find(name);
      if (it == index.end()) seq.truth.emplace_back(std::nullopt);
      else seq.truth.emplace_back(load_mask(it->second, grid));
    }
  }
  return seq;
}

TrainedModel train(const Sequence& seq, std::size_t train_count, const ParamOverrides& overrides,
                   std::uint64_t seed) {
  const int m = overrides.m.value_or(5);
  MODSM_REQUIRE(m >= 1, "m must be at least 1");
  MODSM_REQUIRE(train_count >= static_cast<std::size_t>(m),
                "training window of " + std::to_string(train_count) + " frames is smaller than m = " +
                    std::to_string(m));
  MODSM_REQUIRE(train_count < seq.size(), "training window leaves no frames to process (" +
                                              std::to_string(seq.size()) + " frames, " +
                                              std::to_string(train_count) + " for training)");

  const std::vector<FrameVector> training = head(seq, train_count);
  SubspaceInit<double> init = init_subspace<double>(training, m, seed, overrides.eta.value_or(SolverParams{}.eta));

  TrainedModel model;
  model.padded_columns = init.padded_columns;
  model.subspace = std::move(init.state);
  model.stats.sigma_hat_sq = residual_variance(model.subspace, training);
  const std::vector<SaliencyVector> sal(seq.saliency.begin(),
                                        seq.saliency.begin() + static_cast<std::ptrdiff_t>(train_count));
  std::tie(model.stats.s_M, model.stats.s_m) = saliency_stats(sal);
  model.stats.omega_size = train_count;
  model.stats.intensity_range = 255.0;
  model.derivation = derive_params(model.stats, overrides);
  model.derivation.params.validate();
  return model;
}

std::vector<StreamFrame> run_stream(const Sequence& seq, std::size_t train_count, const TrainedModel& model,
                                    AblationMode mode, const ParamOverrides& overrides, std::ostream* diagnostics) {
  MODSM_REQUIRE(seq.saliency.size() == seq.size(), "sequence saliency is not aligned with frames");
  const ImageGrid grid = seq.frames.front().grid;
  const DifferenceOperator<double> diff(grid);

  SolverParams params = model.derivation.params;
  SubspaceState<double> sub = model.subspace;
  double running_variance = model.stats.sigma_hat_sq;
  Eigen::VectorXd warm_b;

  std::vector<StreamFrame> out;
  out.reserve(seq.size() - train_count);
  for (std::size_t k = train_count; k < seq.size(); ++k) {
    const SaliencyVector& s = uses_saliency(mode) ? seq.saliency[k] : SaliencyVector::zeros(grid);
    auto [result, next] = process_frame(sub, seq.frames[k], s, params, mode, diff, warm_b);

    StreamFrame frame;
    frame.name = seq.names[k];
    frame.mask = std::move(result.mask);
    frame.b = result.b;
    frame.objective_trace = std::move(result.objective_trace);
    frame.converged = result.converged;
    frame.params = params;
    frame.primal_gap_wb = result.primal_gap_wb;
    frame.primal_gap_cdw = result.primal_gap_cdw;
    frame.cg_iterations = result.cg_iterations;

    if (diagnostics) {
      const json line{{"frame", frame.name},
                      {"objective", frame.objective_trace},
                      {"converged", frame.converged},
                      {"beta", params.beta},
                      {"lambda", params.lambda},
                      {"alpha", params.effective_alpha(mode)},
                      {"primal_gap_wb", frame.primal_gap_wb},
                      {"primal_gap_cdw", frame.primal_gap_cdw},
                      {"cg_iterations", frame.cg_iterations},
                      {"foreground", frame.mask.values.cast<int>().sum()}};
      *diagnostics << line.dump() << '\n';
    }

    running_variance = kVarianceSmoothing * running_variance +
                       (1.0 - kVarianceSmoothing) * weighted_residual_variance(next, seq.frames[k], result.b);
    if (!overrides.beta) params.beta = std::max(update_beta(params.beta, running_variance), kBetaFloor);
    if (!overrides.lambda) params.lambda = 5.0 * params.beta;
    if (!overrides.alpha) params.alpha = std::min(model.derivation.alpha_uncapped, 6.5 * params.beta);

    warm_b = std::move(result.b);
    sub = std::move(next);
    out.push_back(std::move(frame));
  }
  return out;
}

std::vector<FrameScore> score_stream(const Sequence& seq, const std::vector<StreamFrame>& stream,
                                     const std::string& video) {
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < seq.size(); ++i) position[seq.names[i]] = i;
  std::vector<FrameScore> scores;
  if (seq.truth.empty()) return scores;
  for (const auto& f : stream) {
    const auto& truth = seq.truth.at(position.at(f.name));
    if (!truth) continue;
    scores.push_back({video, f.name, confusion(f.mask, *truth)});
  }
  return scores;
}

StreamSummary summarize(const std::vector<FrameScore>& scores) {
  StreamSummary s;
  double sum = 0;
  for (const auto& f : scores) {
    s.total += f.counts;
    sum += f.f1();
  }
  s.frames = scores.size();
  s.mean_f1 = scores.empty() ? 0.0 : sum / static_cast<double>(scores.size());
  return s;
}

std::vector<AblationRow> ablate(const Sequence& seq, std::size_t train_count, const ParamOverrides& overrides,
                                std::uint64_t seed) {
  MODSM_REQUIRE(!seq.truth.empty(), "ablation needs ground truth");
  const TrainedModel model = train(seq, train_count, overrides, seed);
  std::vector<AblationRow> rows;
  for (AblationMode mode : {AblationMode::Baseline, AblationMode::AddConnectivity, AblationMode::AddSaliencyMap}) {
    const auto stream = run_stream(seq, train_count, model, mode, overrides);
    rows.push_back({mode, summarize(score_stream(seq, stream, "video"))});
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "mode,mean_f1,total_fp,total_fn\n";
  for (const auto& r : rows) {
    char f1[32];
    std::snprintf(f1, sizeof f1, "%.6f", r.summary.mean_f1);
    out << to_string(r.mode) << ',' << f1 << ',' << r.summary.total.fp << ',' << r.summary.total.fn << '\n';
  }
}

int configure_threads() {
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("MODSM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    MODSM_REQUIRE(end != env && *end == '\0' && v >= 1, std::string("MODSM_THREADS must be a positive integer, got '") +
                                                            env + "'");
    threads = static_cast<int>(v);
  }
  Eigen::setNbThreads(threads);
  return threads;
}

int cmd_run(const RunConfig& config, std::ostream& log, std::ostream& err) {
  try {
    configure_threads();
    MODSM_REQUIRE(!config.output_dir.empty(), "output directory not given");
    const bool needs_saliency = uses_saliency(config.mode);
    if (needs_saliency) require_dir(config.saliency_dir, "saliency");
    const Sequence seq = load_sequence(config.frames_dir, config.pattern,
                                       needs_saliency ? std::optional<fs::path>(config.saliency_dir) : std::nullopt,
                                       std::nullopt);

    const TrainedModel model = train(seq, config.train_count, config.overrides, config.seed);
    if (model.derivation.warning) err << "warning: " << *model.derivation.warning << '\n';

    fs::create_directories(config.output_dir);
    save_params(config.output_dir / "params.json", model.derivation.params);
    std::ofstream diagnostics(config.output_dir / "diagnostics.jsonl");
    MODSM_REQUIRE(diagnostics.good(), "cannot write diagnostics in " + config.output_dir.string());

    if (config.verbose) {
      log << "trained on " << config.train_count << " frames: sigma^2=" << model.stats.sigma_hat_sq
          << " s_M=" << model.stats.s_M << " s_m=" << model.stats.s_m << '\n'
          << to_json(model.derivation.params).dump() << '\n';
    }

    const auto stream = run_stream(seq, config.train_count, model, config.mode, config.overrides, &diagnostics);
    std::size_t converged = 0;
    for (const auto& f : stream) {
      write_mask(f.mask, config.output_dir / (f.name + ".pgm"));
      converged += f.converged ? 1 : 0;
      if (config.verbose)
        log << f.name << ": foreground=" << f.mask.values.cast<int>().sum()
            << " objective=" << f.objective_trace.back() << (f.converged ? "" : " (not stable)") << '\n';
    }
    diagnostics.flush();
    MODSM_REQUIRE(diagnostics.good(), "failed writing diagnostics");
    log << "wrote " << stream.size() << " masks to " << config.output_dir.string() << " (" << converged
        << " stable)\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_evaluate(const fs::path& masks_dir, const fs::path& truth_dir, const fs::path& out_csv, std::ostream& log,
                 std::ostream& err) {
  try {
    require_dir(masks_dir, "masks");
    require_dir(truth_dir, "truth");
    const auto masks = index_by_stem(masks_dir);
    const auto truths = index_by_stem(truth_dir);
    const std::string video = fs::absolute(masks_dir).lexically_normal().filename().string();

    std::vector<FrameScore> scores;
    for (const auto& [name, mask_path] : masks) {
      const auto it = truths.find(name);
      if (it == truths.end()) continue;
      const GrayImage image = read_gray_image(mask_path);
      const ForegroundMask mask = load_mask(mask_path, image.grid);
      const ForegroundMask truth = load_mask(it->second, image.grid);
      scores.push_back({video.empty() ? "video" : video, name, confusion(mask, truth)});
    }
    MODSM_REQUIRE(!scores.empty(), "no mask file name matches a truth file name");

    if (!out_csv.empty()) {
      if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
      std::ofstream out(out_csv);
      MODSM_REQUIRE(out.good(), "cannot write " + out_csv.string());
      write_frame_csv(out, scores);
      MODSM_REQUIRE(out.good(), "failed writing " + out_csv.string());
    }
    const Report report = aggregate_report(per_video_f1(scores));
    char line[64];
    std::snprintf(line, sizeof line, "%.6f", report.mean_f1);
    log << "frames: " << scores.size() << '\n' << "mean F1: " << line << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_ablate(const RunConfig& config, const fs::path& out_csv, std::ostream& log, std::ostream& err) {
  try {
    configure_threads();
    require_dir(config.truth_dir, "truth");
    const std::optional<fs::path> saliency =
        config.saliency_dir.empty() ? std::nullopt : std::optional<fs::path>(config.saliency_dir);
    if (!saliency) err << "warning: no saliency directory; the saliency mode will match connectivity\n";
    const Sequence seq = load_sequence(config.frames_dir, config.pattern, saliency, config.truth_dir);
    const auto rows = ablate(seq, config.train_count, config.overrides, config.seed);

    if (!out_csv.empty()) {
      if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
      std::ofstream out(out_csv);
      MODSM_REQUIRE(out.good(), "cannot write " + out_csv.string());
      write_ablation_csv(out, rows);
      MODSM_REQUIRE(out.good(), "failed writing " + out_csv.string());
    }
    write_ablation_csv(log, rows);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace modsm
