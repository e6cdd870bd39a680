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
#include <vector>

#include "modsm/image_io.hpp"

namespace modsm {

/// Synthetic test scene: a smooth background with optional texture, noise
/// and flickering pixels, and one square object that enters at
/// `object_start` and moves on a fixed trajectory.
struct SynthSpec {
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t frames = 80;
  double noise_sigma = 5.0;
  double flicker_fraction = 0.0;   // share of pixels that flicker
  double flicker_amplitude = 30.0; // uniform in [-A, A] each frame
  double texture_amplitude = 0.0;  // fixed uniform texture in [-A, A]
  std::size_t object_size = 12;
  double object_delta = 100.0;     // added to the background
  std::size_t object_start = 20;   // first frame index holding the object
  /// When set, the object is painted with this constant intensity instead.
  std::optional<double> object_intensity;
  std::uint64_t seed = 0;
};

struct SynthFrame {
  std::vector<std::uint8_t> frame;
  std::vector<std::uint8_t> truth;             // 255 on the object
  std::vector<std::uint8_t> saliency;          // 255 on the object
  std::vector<std::uint8_t> saliency_degraded; // box-blurred, 10% randomised
};

struct SynthScene {
  ImageGrid grid;
  std::vector<SynthFrame> frames;
};

/// Top-left corner (row, col) of the object in frame `j`.
std::pair<std::size_t, std::size_t> object_origin(const SynthSpec& spec, std::size_t j);

SynthScene generate_scene(const SynthSpec& spec);

/// Writes frames/, truth/, saliency/ and saliency_degraded/ under `root`,
/// one NNN.pgm per frame.
void write_scene(const SynthScene& scene, const std::filesystem::path& root);

}  // namespace modsm
