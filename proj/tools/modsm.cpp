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

// Command-line front end: run, evaluate, ablate, synth.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "modsm/pipeline.hpp"
#include "modsm/synth.hpp"

namespace {

using modsm::RunConfig;
namespace fs = std::filesystem;

struct StreamFlags {
  std::string frames;
  std::string saliency;
  std::string truth;
  std::string out;
  std::string mode;
  std::string config;
  std::string pattern;
  std::vector<std::string> params;
  std::size_t train_count = 0;
  std::uint64_t seed = 0;
  bool verbose = false;
};

void add_stream_options(CLI::App* cmd, StreamFlags& f) {
  cmd->add_option("--frames", f.frames, "directory of input frames (PGM, PPM or PNG)");
  cmd->add_option("--saliency", f.saliency, "directory of saliency maps named like the frames");
  cmd->add_option("--train-count", f.train_count, "object-free frames used for training (default 20)");
  cmd->add_option("--param", f.params, "parameter override key=value, repeatable");
  cmd->add_option("--config", f.config, "JSON config file; flags take precedence");
  cmd->add_option("--pattern", f.pattern, "glob selecting frame files (default *)");
  cmd->add_option("--seed", f.seed, "seed for subspace padding");
}

// Config file keys: frames, saliency, truth, out, mode, train_count, seed,
// pattern, verbose, params (object).
RunConfig resolve(const StreamFlags& f, CLI::App* cmd) {
  RunConfig c;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw modsm::Error("cannot open config " + f.config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw modsm::Error("malformed config " + f.config + ": " + e.what());
    }
    if (!j.is_object()) throw modsm::Error("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "frames") c.frames_dir = value.get<std::string>();
      else if (key == "saliency") c.saliency_dir = value.get<std::string>();
      else if (key == "truth") c.truth_dir = value.get<std::string>();
      else if (key == "out") c.output_dir = value.get<std::string>();
      else if (key == "mode") c.mode = modsm::parse_ablation_mode(value.get<std::string>());
      else if (key == "train_count") c.train_count = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "pattern") c.pattern = value.get<std::string>();
      else if (key == "verbose") c.verbose = value.get<bool>();
      else if (key == "params") c.overrides.merge(value);
      else throw modsm::Error("unknown config key '" + key + "'");
    }
  }
  auto given = [cmd](const char* name) { return cmd->get_option_no_throw(name) && cmd->count(name) > 0; };
  if (given("--frames")) c.frames_dir = f.frames;
  if (given("--saliency")) c.saliency_dir = f.saliency;
  if (given("--truth")) c.truth_dir = f.truth;
  if (given("--out")) c.output_dir = f.out;
  if (given("--mode")) c.mode = modsm::parse_ablation_mode(f.mode);
  if (given("--train-count")) c.train_count = f.train_count;
  if (given("--seed")) c.seed = f.seed;
  if (given("--pattern")) c.pattern = f.pattern;
  if (given("--verbose")) c.verbose = true;
  modsm::ParamOverrides flags;
  for (const auto& p : f.params) flags.set(p);
  c.overrides |= flags;
  if (c.frames_dir.empty()) throw modsm::Error("--frames is required");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving-object detection by saliency-regularised subspace background subtraction"};
  app.require_subcommand(1);

  StreamFlags run_flags;
  auto* run = app.add_subcommand("run", "detect foreground in a frame directory");
  add_stream_options(run, run_flags);
  run->add_option("--out", run_flags.out, "output directory for masks, params.json, diagnostics.jsonl");
  run->add_option("--mode", run_flags.mode, "baseline | connectivity | saliency (default saliency)");
  run->add_flag("--verbose", run_flags.verbose, "per-frame progress");

  std::string masks, truth, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "score masks against ground truth");
  evaluate->add_option("--masks", masks, "directory of masks")->required();
  evaluate->add_option("--truth", truth, "directory of ground-truth masks")->required();
  evaluate->add_option("--out", eval_out, "per-frame CSV");

  StreamFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "compare baseline, connectivity and saliency modes");
  add_stream_options(ablate, ablate_flags);
  ablate->add_option("--truth", ablate_flags.truth, "directory of ground-truth masks");
  ablate->add_option("--out", ablate_flags.out, "comparison CSV");

  modsm::SynthSpec spec;
  std::string synth_out;
  bool textureless = false;
  auto* synth = app.add_subcommand("synth", "write a synthetic test sequence");
  synth->add_option("--out", synth_out, "output root")->required();
  synth->add_option("--width", spec.width, "frame width")->check(CLI::PositiveNumber);
  synth->add_option("--height", spec.height, "frame height")->check(CLI::PositiveNumber);
  synth->add_option("--frames", spec.frames, "frame count");
  synth->add_option("--noise-sigma", spec.noise_sigma, "Gaussian noise sigma on the 0-255 scale");
  synth->add_option("--flicker", spec.flicker_fraction, "fraction of flickering pixels")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--flicker-amplitude", spec.flicker_amplitude, "flicker amplitude");
  synth->add_option("--texture", spec.texture_amplitude, "static texture amplitude");
  synth->add_option("--object-size", spec.object_size, "side of the square object");
  synth->add_option("--object-delta", spec.object_delta, "object brightness offset");
  synth->add_option("--object-start", spec.object_start, "first frame with the object");
  synth->add_flag("--textureless", textureless, "paint the object flat (intensity 90)");
  synth->add_option("--seed", spec.seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      RunConfig c = resolve(run_flags, run);
      return modsm::cmd_run(c, std::cout, std::cerr);
    }
    if (evaluate->parsed()) return modsm::cmd_evaluate(masks, truth, eval_out, std::cout, std::cerr);
    if (ablate->parsed()) {
      RunConfig c = resolve(ablate_flags, ablate);
      return modsm::cmd_ablate(c, ablate_flags.out, std::cout, std::cerr);
    }
    if (synth->parsed()) {
      if (textureless) spec.object_intensity = 90.0;
      modsm::write_scene(modsm::generate_scene(spec), synth_out);
      std::cout << "wrote " << spec.frames << " frames to " << synth_out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
