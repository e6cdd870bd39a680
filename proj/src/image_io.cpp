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

#include "modsm/image_io.hpp"

#include <fnmatch.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace modsm {

namespace fs = std::filesystem;

namespace {

std::uint8_t luma(unsigned r, unsigned g, unsigned b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

// Netpbm header token reader; skips whitespace and '#' comments.
class PnmHeader {
 public:
  explicit PnmHeader(std::istream& in) : in_(in) {}

  unsigned long next_number(const fs::path& path) {
    skip_space();
    unsigned long value = 0;
    bool any = false;
    while (in_ && std::isdigit(in_.peek())) {
      value = value * 10 + static_cast<unsigned long>(in_.get() - '0');
      any = true;
    }
    if (!any) throw Error("malformed PNM header in " + path.string());
    return value;
  }

 private:
  void skip_space() {
    for (;;) {
      const int c = in_.peek();
      if (c == '#') {
        std::string ignored;
        std::getline(in_, ignored);
      } else if (c != EOF && std::isspace(c)) {
        in_.get();
      } else {
        return;
      }
    }
  }

  std::istream& in_;
};

GrayImage read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    throw Error("unsupported PNM variant in " + path.string() + " (need P5 or P6)");
  const bool color = magic[1] == '6';

  PnmHeader header(in);
  const auto width = header.next_number(path);
  const auto height = header.next_number(path);
  const auto maxval = header.next_number(path);
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535)
    throw Error("invalid PNM dimensions or maxval in " + path.string());
  in.get();  // single whitespace byte before the raster

  const std::size_t channels = color ? 3 : 1;
  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t count = width * height;
  std::vector<unsigned char> raw(count * channels * bytes_per_sample);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw Error("truncated raster in " + path.string());

  auto sample = [&](std::size_t i) -> unsigned {
    unsigned v = bytes_per_sample == 2 ? (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1] : raw[i];
    if (maxval == 255) return v;
    return static_cast<unsigned>(std::lround(v * 255.0 / static_cast<double>(maxval)));
  };

  GrayImage img{ImageGrid(width, height), std::vector<std::uint8_t>(count)};
  for (std::size_t i = 0; i < count; ++i) {
    img.pixels[i] = color ? luma(sample(3 * i), sample(3 * i + 1), sample(3 * i + 2))
                          : static_cast<std::uint8_t>(sample(i));
  }
  return img;
}

GrayImage read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw Error("cannot decode PNG " + path.string() + ": " + image.message);

  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw Error("cannot decode PNG " + path.string() + ": " + message);
  }

  GrayImage img{ImageGrid(image.width, image.height), {}};
  const std::size_t count = img.grid.size();
  img.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    img.pixels[i] = color ? luma(buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]) : buffer[i];
  }
  return img;
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

void require_grid(const GrayImage& img, const ImageGrid& grid, const fs::path& path) {
  if (!(img.grid == grid))
    throw Error("dimension mismatch: " + path.string() + " is " + to_string(img.grid) +
                ", expected " + to_string(grid));
}

}  // namespace

std::string to_string(const ImageGrid& grid) {
  return std::to_string(grid.width) + "x" + std::to_string(grid.height);
}

GrayImage read_gray_image(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error("no such file: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  throw Error("unsupported image format: " + path.string());
}

void write_pgm(const fs::path& path, const ImageGrid& grid, const std::vector<std::uint8_t>& pixels) {
  MODSM_REQUIRE(pixels.size() == grid.size(), "pixel count does not match grid");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "P5\n" << grid.width << ' ' << grid.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<fs::path> match_files(const fs::path& directory, const std::string& pattern) {
  if (!fs::is_directory(directory)) throw Error("not a directory: " + directory.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (::fnmatch(pattern.c_str(), name.c_str(), 0) == 0) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

FrameVector load_frame(const fs::path& path) {
  const GrayImage img = read_gray_image(path);
  FrameVector frame{img.grid, Eigen::VectorXd(static_cast<Eigen::Index>(img.grid.size()))};
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    frame.values[static_cast<Eigen::Index>(i)] = img.pixels[i];
  return frame;
}

std::vector<FrameVector> load_frame_sequence(const std::vector<fs::path>& files) {
  if (files.empty()) throw Error("no frames matched");
  std::vector<FrameVector> frames;
  frames.reserve(files.size());
  for (const auto& path : files) {
    FrameVector frame = load_frame(path);
    if (!frames.empty() && !(frame.grid == frames.front().grid))
      throw Error("dimension mismatch: " + path.string() + " is " + to_string(frame.grid) +
                  ", expected " + to_string(frames.front().grid));
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<FrameVector> load_frame_sequence(const fs::path& directory, const std::string& pattern) {
  return load_frame_sequence(match_files(directory, pattern));
}

SaliencyVector load_saliency(const fs::path& path, const ImageGrid& grid) {
  const GrayImage img = read_gray_image(path);
  require_grid(img, grid, path);
  SaliencyVector s{grid, Eigen::VectorXd(static_cast<Eigen::Index>(grid.size()))};
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    s.values[static_cast<Eigen::Index>(i)] = img.pixels[i] / 255.0;
  return s;
}

ForegroundMask load_mask(const fs::path& path, const ImageGrid& grid) {
  const GrayImage img = read_gray_image(path);
  require_grid(img, grid, path);
  ForegroundMask mask = ForegroundMask::zeros(grid);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    mask.values[static_cast<Eigen::Index>(i)] = img.pixels[i] != 0 ? 1 : 0;
  return mask;
}

void write_mask(const ForegroundMask& mask, const fs::path& path) {
  std::vector<std::uint8_t> pixels(mask.grid.size());
  for (std::size_t i = 0; i < pixels.size(); ++i)
    pixels[i] = mask.values[static_cast<Eigen::Index>(i)] ? 255 : 0;
  write_pgm(path, mask.grid, pixels);
}

}  // namespace modsm
