#include "easter/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "easter/rng.hpp"

namespace easter {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint8_t clamp_pixel(double v) {
  const long r = std::lround(v);
  return static_cast<std::uint8_t>(std::clamp(r, 0l, 255l));
}

double bilinear(const Image& img, double x, double y, double fill) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  auto px = [&](int xx, int yy) -> double {
    if (xx < 0 || xx >= img.width || yy < 0 || yy >= img.height) return fill;
    return img.at(yy, xx);
  };
  const double top = px(x0, y0) * (1.0 - fx) + px(x0 + 1, y0) * fx;
  const double bot = px(x0, y0 + 1) * (1.0 - fx) + px(x0 + 1, y0 + 1) * fx;
  return top * (1.0 - fy) + bot * fy;
}

Image resample(const Image& img, double m00, double m01, double m10, double m11) {
  // Inverse-maps each output pixel through the 2x2 matrix about the center.
  const double cx = (img.width - 1) / 2.0;
  const double cy = (img.height - 1) / 2.0;
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double xi = m00 * dx + m01 * dy + cx;
      const double yi = m10 * dx + m11 * dy + cy;
      out.at(y, x) = clamp_pixel(bilinear(img, xi, yi, 255.0));
    }
  }
  return out;
}

Image rotate_image(const Image& img, double degrees) {
  const double rad = degrees * kPi / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  // Inverse of rotation by +rad.
  return resample(img, c, s, -s, c);
}

Image shear_image(const Image& img, double slope) {
  // Output (x, y) takes input (x - slope * (y - cy), y).
  return resample(img, 1.0, -slope, 0.0, 1.0);
}

Image morph(const Image& img, int radius, bool dilate) {
  if (radius < 1) return img;
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      // Ink is 0, so thickening strokes takes the window minimum.
      int best = dilate ? 255 : 0;
      const int y0 = std::max(0, y - radius), y1 = std::min(img.height - 1, y + radius);
      const int x0 = std::max(0, x - radius), x1 = std::min(img.width - 1, x + radius);
      for (int yy = y0; yy <= y1; ++yy) {
        for (int xx = x0; xx <= x1; ++xx) {
          const int v = img.at(yy, xx);
          best = dilate ? std::min(best, v) : std::max(best, v);
        }
      }
      out.at(y, x) = static_cast<std::uint8_t>(best);
    }
  }
  return out;
}

void draw_line(Image& img, int x0, int y0, int x1, int y1) {
  const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1;
  for (int t = 0; t < steps; ++t) {
    const double f = steps == 1 ? 0.0 : static_cast<double>(t) / (steps - 1);
    const int x = static_cast<int>(std::lround(x0 + f * (x1 - x0)));
    const int y = static_cast<int>(std::lround(y0 + f * (y1 - y0)));
    img.at(y, x) = 0;
  }
}

int int_draw(Rng& rng, double lo, double hi) {
  const auto a = static_cast<std::int64_t>(std::lround(lo));
  const auto b = static_cast<std::int64_t>(std::lround(hi));
  return static_cast<int>(a == b ? a : rng.uniform_int(a, b));
}

}  // namespace

const char* augment_kind_name(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::gaussian_noise:
      return "gaussian_noise";
    case AugmentKind::salt_pepper:
      return "salt_pepper";
    case AugmentKind::speckle:
      return "speckle";
    case AugmentKind::random_lines:
      return "random_lines";
    case AugmentKind::pad_edges:
      return "pad_edges";
    case AugmentKind::rotate:
      return "rotate";
    case AugmentKind::shear:
      return "shear";
    case AugmentKind::morph_dilate:
      return "morph_dilate";
    case AugmentKind::morph_erode:
      return "morph_erode";
  }
  return "unknown";
}

AugmentKind parse_augment_kind(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(AugmentKind::morph_erode); ++k) {
    const auto kind = static_cast<AugmentKind>(k);
    if (name == augment_kind_name(kind)) return kind;
  }
  throw std::invalid_argument(
      "unknown augmentation kind '" + name +
      "'; expected one of gaussian_noise salt_pepper speckle random_lines "
      "pad_edges rotate shear morph_dilate morph_erode");
}

void validate_augment_op(const AugmentOp& op) {
  const std::string name = augment_kind_name(op.kind);
  if (!(op.probability >= 0.0 && op.probability <= 1.0)) {
    throw std::invalid_argument(name + ": probability must be in [0, 1]");
  }
  if (!(op.lo <= op.hi) || !std::isfinite(op.lo) || !std::isfinite(op.hi)) {
    throw std::invalid_argument(name + ": range [lo, hi] must be finite with lo <= hi");
  }
  switch (op.kind) {
    case AugmentKind::rotate:
      if (op.lo < -10.0 || op.hi > 10.0) {
        throw std::invalid_argument("rotate: range must stay within [-10, 10] degrees");
      }
      break;
    case AugmentKind::shear:
      if (op.lo < -0.3 || op.hi > 0.3) {
        throw std::invalid_argument("shear: range must stay within [-0.3, 0.3]");
      }
      break;
    case AugmentKind::salt_pepper:
      if (op.lo < 0.0 || op.hi > 1.0) {
        throw std::invalid_argument("salt_pepper: density range must stay within [0, 1]");
      }
      break;
    default:
      if (op.lo < 0.0) {
        throw std::invalid_argument(name + ": range must be nonnegative");
      }
      break;
  }
}

AugmentPipeline parse_augment_pipeline(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("augmentation pipeline is not valid JSON: ") +
                                e.what());
  }
  if (!j.is_array()) {
    throw std::invalid_argument("augmentation pipeline must be a JSON array of ops");
  }
  AugmentPipeline pipeline;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("kind")) {
      throw std::invalid_argument("each augmentation op needs a 'kind'");
    }
    AugmentOp op;
    op.kind = parse_augment_kind(item.at("kind").get<std::string>());
    op.probability = item.value("probability", 1.0);
    if (item.contains("range")) {
      const auto& r = item.at("range");
      if (!r.is_array() || r.size() != 2) {
        throw std::invalid_argument(std::string(augment_kind_name(op.kind)) +
                                    ": 'range' must be [lo, hi]");
      }
      op.lo = r[0].get<double>();
      op.hi = r[1].get<double>();
    }
    validate_augment_op(op);
    pipeline.ops.push_back(op);
  }
  return pipeline;
}

std::string augment_pipeline_to_json(const AugmentPipeline& pipeline) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const AugmentOp& op : pipeline.ops) {
    nlohmann::ordered_json item;
    item["kind"] = augment_kind_name(op.kind);
    item["probability"] = op.probability;
    item["range"] = {op.lo, op.hi};
    arr.push_back(std::move(item));
  }
  return arr.dump(2);
}

Image pad_edges(const Image& image, int top, int bottom, int left, int right,
                std::uint8_t fill) {
  if (top < 0 || bottom < 0 || left < 0 || right < 0) {
    throw std::invalid_argument("pad_edges: pads must be nonnegative");
  }
  Image out(image.width + left + right, image.height + top + bottom, fill);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      out.at(y + top, x + left) = image.at(y, x);
    }
  }
  return out;
}

Image apply(const AugmentPipeline& pipeline, const Image& image, std::uint64_t sample_seed) {
  Rng rng(sample_seed);
  Image img = image;
  for (const AugmentOp& op : pipeline.ops) {
    if (!rng.bernoulli(op.probability)) continue;
    switch (op.kind) {
      case AugmentKind::gaussian_noise: {
        const double sigma = rng.uniform(op.lo, op.hi);
        for (auto& p : img.pixels) p = clamp_pixel(p + rng.normal(0.0, sigma));
        break;
      }
      case AugmentKind::salt_pepper: {
        const double density = rng.uniform(op.lo, op.hi);
        for (auto& p : img.pixels) {
          if (rng.bernoulli(density)) p = rng.bernoulli(0.5) ? 0 : 255;
        }
        break;
      }
      case AugmentKind::speckle: {
        const double sigma = rng.uniform(op.lo, op.hi);
        for (auto& p : img.pixels) p = clamp_pixel(p * (1.0 + rng.normal(0.0, sigma)));
        break;
      }
      case AugmentKind::random_lines: {
        if (img.width < 1 || img.height < 1) break;
        const int count = int_draw(rng, op.lo, op.hi);
        for (int i = 0; i < count; ++i) {
          const int x0 = static_cast<int>(rng.uniform_int(0, img.width - 1));
          const int y0 = static_cast<int>(rng.uniform_int(0, img.height - 1));
          const int x1 = static_cast<int>(rng.uniform_int(0, img.width - 1));
          const int y1 = static_cast<int>(rng.uniform_int(0, img.height - 1));
          draw_line(img, x0, y0, x1, y1);
        }
        break;
      }
      case AugmentKind::pad_edges: {
        const int top = int_draw(rng, op.lo, op.hi);
        const int bottom = int_draw(rng, op.lo, op.hi);
        const int left = int_draw(rng, op.lo, op.hi);
        const int right = int_draw(rng, op.lo, op.hi);
        img = pad_edges(img, top, bottom, left, right);
        break;
      }
      case AugmentKind::rotate:
        img = rotate_image(img, rng.uniform(op.lo, op.hi));
        break;
      case AugmentKind::shear:
        img = shear_image(img, rng.uniform(op.lo, op.hi));
        break;
      case AugmentKind::morph_dilate:
        img = morph(img, int_draw(rng, op.lo, op.hi), true);
        break;
      case AugmentKind::morph_erode:
        img = morph(img, int_draw(rng, op.lo, op.hi), false);
        break;
    }
  }
  return img;
}

}  // namespace easter
