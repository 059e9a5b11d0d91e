#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mlfx/tensor.hpp"

namespace mlfx {

// Dense raster with row-major, channel-interleaved doubles. Loaded images are
// normalized to [0, 1]; synthetic generators produce the same range.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t ch, double fill = 0.0)
      : height(h), width(w), channels(ch), pixels(h * w * ch, fill) {}

  std::size_t positions() const { return height * width; }
  std::size_t scalars() const { return pixels.size(); }

  double& at(std::size_t row, std::size_t col, std::size_t ch = 0) {
    return pixels[(row * width + col) * channels + ch];
  }
  double at(std::size_t row, std::size_t col, std::size_t ch = 0) const {
    return pixels[(row * width + col) * channels + ch];
  }

  // Flattened view used as classifier input.
  Tensor to_tensor() const { return Tensor({height, width, channels}, pixels); }

  static Image from_tensor(const Tensor& t);
};

// Reads PGM (P2/P5) or PPM (P3/P6), maxval up to 65535, values scaled to [0,1].
Image read_image(const std::string& path);

// Writes 8-bit binary PGM/PPM; values are clamped to [0,1] then quantized.
void write_pgm(const Image& img, const std::string& path);
void write_ppm(const Image& img, const std::string& path);

// Writes raw integer labels as a PGM with maxval = max label (up to 65535).
void write_label_pgm(const std::vector<std::uint32_t>& labels, std::size_t height,
                     std::size_t width, const std::string& path);

}  // namespace mlfx
