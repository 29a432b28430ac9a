#include "easter/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace easter {

Image::Image(int width_in, int height_in, std::uint8_t fill)
    : width(width_in), height(height_in) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  pixels.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

namespace {

int read_pnm_int(std::istream& in, const std::string& path) {
  // Skips whitespace and '#' comments, then reads one decimal value.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) {
    throw std::runtime_error(path + ": malformed image header");
  }
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > 1 << 24) throw std::runtime_error(path + ": image header value out of range");
    c = in.get();
  }
  return value;
}

}  // namespace

Image read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open image");
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  const bool color = m0 == 'P' && m1 == '6';
  if (!(m0 == 'P' && (m1 == '5' || m1 == '6'))) {
    throw std::runtime_error(path + ": not a binary PGM/PPM file");
  }
  const int width = read_pnm_int(in, path);
  const int height = read_pnm_int(in, path);
  const int maxval = read_pnm_int(in, path);
  if (width < 1 || height < 1 || maxval < 1 || maxval > 255) {
    throw std::runtime_error(path + ": unsupported image geometry or depth");
  }
  // The header terminates with exactly one whitespace byte before the raster.
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<std::uint8_t> raw(color ? count * 3 : count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw std::runtime_error(path + ": truncated image data");
  }

  Image img(width, height);
  if (color) {
    for (std::size_t i = 0; i < count; ++i) {
      const double r = raw[i * 3], g = raw[i * 3 + 1], b = raw[i * 3 + 2];
      double y = 0.299 * r + 0.587 * g + 0.114 * b;
      if (maxval != 255) y = y * 255.0 / maxval;
      img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(y, 0.0, 255.0)));
    }
  } else if (maxval == 255) {
    img.pixels = std::move(raw);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      img.pixels[i] = static_cast<std::uint8_t>(raw[i] * 255 / maxval);
    }
  }
  return img;
}

void write_pgm(const Image& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

Image resize_bilinear(const Image& image, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) {
    throw std::invalid_argument("resize target must be positive");
  }
  if (new_width == image.width && new_height == image.height) return image;
  Image out(new_width, new_height);
  const double sx = static_cast<double>(image.width) / new_width;
  const double sy = static_cast<double>(image.height) / new_height;
  for (int y = 0; y < new_height; ++y) {
    // Pixel centers map to pixel centers so edges stay edges.
    double src_y = (y + 0.5) * sy - 0.5;
    src_y = std::clamp(src_y, 0.0, static_cast<double>(image.height - 1));
    const int y0 = static_cast<int>(src_y);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double fy = src_y - y0;
    for (int x = 0; x < new_width; ++x) {
      double src_x = (x + 0.5) * sx - 0.5;
      src_x = std::clamp(src_x, 0.0, static_cast<double>(image.width - 1));
      const int x0 = static_cast<int>(src_x);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double fx = src_x - x0;
      const double top = image.at(y0, x0) * (1.0 - fx) + image.at(y0, x1) * fx;
      const double bottom = image.at(y1, x0) * (1.0 - fx) + image.at(y1, x1) * fx;
      const double v = top * (1.0 - fy) + bottom * fy;
      out.at(y, x) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  }
  return out;
}

Image resize_to_height(const Image& image, int target_height) {
  if (image.height == target_height) return image;
  const double scale = static_cast<double>(target_height) / image.height;
  const int new_width = std::max(1, static_cast<int>(std::lround(image.width * scale)));
  return resize_bilinear(image, new_width, target_height);
}

Tensor image_to_tensor(const Image& image) {
  Tensor t = Tensor::zeros({image.height, image.width});
  float* out = t.data();
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    out[i] = (static_cast<float>(image.pixels[i]) / 255.0f - 0.5f) / 0.5f;
  }
  return t;
}

}  // namespace easter
