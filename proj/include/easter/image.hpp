#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "easter/tensor.hpp"

namespace easter {

// 8-bit grayscale raster, row-major. 0 is ink, 255 is background.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int width, int height, std::uint8_t fill = 255);

  std::uint8_t& at(int y, int x) {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
  std::uint8_t at(int y, int x) const {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
};

// Binary PGM (P5). Color PPM (P6) input is converted to luminance with the
// 0.299/0.587/0.114 weights.
Image read_image(const std::string& path);
void write_pgm(const Image& image, const std::string& path);

Image resize_bilinear(const Image& image, int new_width, int new_height);

// Aspect-preserving rescale to a fixed height.
Image resize_to_height(const Image& image, int target_height);

// [height, width] tensor with pixels mapped to [-1, 1]; background is +1.
Tensor image_to_tensor(const Image& image);

}  // namespace easter
