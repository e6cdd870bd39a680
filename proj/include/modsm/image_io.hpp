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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "modsm/error.hpp"

namespace modsm {

/// Pixel lattice of one video. Every vector in the library is a row-major
/// flattening over this grid: index = row * width + col.
struct ImageGrid {
  std::size_t width = 0;
  std::size_t height = 0;

  ImageGrid() = default;
  ImageGrid(std::size_t w, std::size_t h) : width(w), height(h) {
    MODSM_REQUIRE(w >= 1 && h >= 1, "image grid must have at least one pixel");
  }

  std::size_t size() const { return width * height; }

  std::size_t flatten(std::size_t row, std::size_t col) const { return row * width + col; }
  std::pair<std::size_t, std::size_t> unflatten(std::size_t index) const {
    return {index / width, index % width};
  }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;
};

std::string to_string(const ImageGrid& grid);

using MaskVector = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

/// One grayscale frame, intensities on the 0..255 scale.
struct FrameVector {
  ImageGrid grid;
  Eigen::VectorXd values;
};

/// Per-pixel saliency in [0,1].
struct SaliencyVector {
  ImageGrid grid;
  Eigen::VectorXd values;

  static SaliencyVector zeros(const ImageGrid& grid) {
    return {grid, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()))};
  }
};

/// Binary foreground indicator; 1 = foreground.
struct ForegroundMask {
  ImageGrid grid;
  MaskVector values;

  static ForegroundMask zeros(const ImageGrid& grid) {
    return {grid, MaskVector::Zero(static_cast<Eigen::Index>(grid.size()))};
  }
};

/// Decoded 8-bit image. Color sources are already reduced to luma.
struct GrayImage {
  ImageGrid grid;
  std::vector<std::uint8_t> pixels;
};

/// Reads binary PGM (P5), binary PPM (P6) or PNG. Anything wider than 8 bits
/// per sample is reduced to its high byte; color is converted with
/// round(0.299 R + 0.587 G + 0.114 B).
GrayImage read_gray_image(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM.
void write_pgm(const std::filesystem::path& path, const ImageGrid& grid,
               const std::vector<std::uint8_t>& pixels);

/// Regular files in `directory` whose name matches the shell glob `pattern`,
/// in lexicographic order of file name.
std::vector<std::filesystem::path> match_files(const std::filesystem::path& directory,
                                               const std::string& pattern);

std::vector<FrameVector> load_frame_sequence(const std::vector<std::filesystem::path>& files);
std::vector<FrameVector> load_frame_sequence(const std::filesystem::path& directory,
                                             const std::string& pattern);

FrameVector load_frame(const std::filesystem::path& path);

SaliencyVector load_saliency(const std::filesystem::path& path, const ImageGrid& grid);

/// Ground truth and written masks alike: any nonzero pixel is foreground.
ForegroundMask load_mask(const std::filesystem::path& path, const ImageGrid& grid);

/// Foreground = 255, background = 0.
void write_mask(const ForegroundMask& mask, const std::filesystem::path& path);

}  // namespace modsm
