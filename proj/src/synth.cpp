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

#include "modsm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "modsm/error.hpp"

namespace modsm {

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

// 5x5 mean with edge replication.
std::vector<double> box_blur(const std::vector<double>& in, std::size_t w, std::size_t h) {
  std::vector<double> out(in.size());
  const auto W = static_cast<long>(w);
  const auto H = static_cast<long>(h);
  for (long r = 0; r < H; ++r) {
    for (long c = 0; c < W; ++c) {
      double sum = 0;
      for (long dr = -2; dr <= 2; ++dr) {
        for (long dc = -2; dc <= 2; ++dc) {
          const long rr = std::clamp(r + dr, 0L, H - 1);
          const long cc = std::clamp(c + dc, 0L, W - 1);
          sum += in[static_cast<std::size_t>(rr * W + cc)];
        }
      }
      out[static_cast<std::size_t>(r * W + c)] = sum / 25.0;
    }
  }
  return out;
}

}  // namespace

std::pair<std::size_t, std::size_t> object_origin(const SynthSpec& spec, std::size_t j) {
  const std::size_t span_x = spec.width - spec.object_size;
  const std::size_t span_y = spec.height - spec.object_size;
  const std::size_t col = span_x == 0 ? 0 : (4 + 2 * j) % span_x;
  const std::size_t row = span_y == 0 ? 0 : (10 + j) % span_y;
  return {row, col};
}

SynthScene generate_scene(const SynthSpec& spec) {
  MODSM_REQUIRE(spec.width >= 1 && spec.height >= 1, "synth: empty grid");
  MODSM_REQUIRE(spec.object_size <= std::min(spec.width, spec.height), "synth: object larger than frame");
  MODSM_REQUIRE(spec.noise_sigma >= 0, "synth: noise sigma must be >= 0");
  MODSM_REQUIRE(spec.flicker_fraction >= 0 && spec.flicker_fraction <= 1, "synth: flicker fraction outside [0,1]");

  SynthScene scene{ImageGrid(spec.width, spec.height), {}};
  const std::size_t n = scene.grid.size();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> background(n);
  for (std::size_t r = 0; r < spec.height; ++r) {
    for (std::size_t c = 0; c < spec.width; ++c) {
      double v = 90.0 + 40.0 * std::sin(double(c) / 7.0) + 30.0 * std::cos(double(r) / 9.0);
      if (spec.texture_amplitude > 0) v += spec.texture_amplitude * (2.0 * unit(rng) - 1.0);
      background[scene.grid.flatten(r, c)] = v;
    }
  }

  std::vector<std::size_t> flicker;
  for (std::size_t i = 0; i < n; ++i)
    if (unit(rng) < spec.flicker_fraction) flicker.push_back(i);

  scene.frames.reserve(spec.frames);
  for (std::size_t j = 0; j < spec.frames; ++j) {
    std::vector<double> value = background;
    for (std::size_t i : flicker) value[i] += spec.flicker_amplitude * (2.0 * unit(rng) - 1.0);

    std::vector<double> object(n, 0.0);
    if (j >= spec.object_start && spec.object_size > 0) {
      const auto [r0, c0] = object_origin(spec, j - spec.object_start);
      for (std::size_t r = r0; r < r0 + spec.object_size; ++r) {
        for (std::size_t c = c0; c < c0 + spec.object_size; ++c) {
          const std::size_t i = scene.grid.flatten(r, c);
          object[i] = 1.0;
          value[i] = spec.object_intensity ? *spec.object_intensity : value[i] + spec.object_delta;
        }
      }
    }
    if (spec.noise_sigma > 0)
      for (auto& v : value) v += spec.noise_sigma * gauss(rng);

    std::vector<double> degraded = box_blur(object, spec.width, spec.height);
    for (auto& d : degraded)
      if (unit(rng) < 0.1) d = unit(rng);

    SynthFrame f;
    f.frame.resize(n);
    f.truth.resize(n);
    f.saliency.resize(n);
    f.saliency_degraded.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      f.frame[i] = to_byte(value[i]);
      f.truth[i] = object[i] > 0 ? 255 : 0;
      f.saliency[i] = f.truth[i];
      f.saliency_degraded[i] = to_byte(255.0 * degraded[i]);
    }
    scene.frames.push_back(std::move(f));
  }
  return scene;
}

void write_scene(const SynthScene& scene, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const char* dirs[] = {"frames", "truth", "saliency", "saliency_degraded"};
  for (const char* d : dirs) fs::create_directories(root / d);
  for (std::size_t j = 0; j < scene.frames.size(); ++j) {
    char name[32];
    std::snprintf(name, sizeof name, "%03zu.pgm", j);
    const auto& f = scene.frames[j];
    write_pgm(root / "frames" / name, scene.grid, f.frame);
    write_pgm(root / "truth" / name, scene.grid, f.truth);
    write_pgm(root / "saliency" / name, scene.grid, f.saliency);
    write_pgm(root / "saliency_degraded" / name, scene.grid, f.saliency_degraded);
  }
}

}  // namespace modsm
