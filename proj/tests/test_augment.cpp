#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "easter/augment.hpp"
#include "easter/datagen.hpp"
#include "easter/image.hpp"

using namespace easter;

namespace {

Image gray_image(int width, int height, std::uint8_t value) {
  return Image(width, height, value);
}

AugmentPipeline single_op(AugmentKind kind, double lo, double hi, double probability = 1.0) {
  AugmentOp op;
  op.kind = kind;
  op.probability = probability;
  op.lo = lo;
  op.hi = hi;
  validate_augment_op(op);
  AugmentPipeline p;
  p.ops.push_back(op);
  return p;
}

int ink_pixels(const Image& img) {
  int count = 0;
  for (unsigned char p : img.pixels) {
    if (p < 128) ++count;
  }
  return count;
}

double mean_abs_diff(const Image& a, const Image& b) {
  REQUIRE(a.width == b.width);
  REQUIRE(a.height == b.height);
  double total = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    total += std::abs(static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]));
  }
  return total / static_cast<double>(a.pixels.size());
}

// One 3x3 box blur. Round-trip measurements use soft-edged text: resampling
// a pure 0/255 dot-matrix twice loses more than interpolation tolerance no
// matter the resampler, while scanned or photographed text has soft edges.
Image soften(const Image& in) {
  Image out(in.width, in.height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      int sum = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          sum += (yy >= 0 && yy < in.height && xx >= 0 && xx < in.width) ? in.at(yy, xx) : 255;
        }
      }
      out.at(y, x) = static_cast<std::uint8_t>((sum + 4) / 9);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("pipeline with every probability zero returns the image unchanged") {
  const Image img = render_text("Xy-7", TextStyle{});
  AugmentPipeline pipeline;
  for (int k = 0; k <= static_cast<int>(AugmentKind::morph_erode); ++k) {
    AugmentOp op;
    op.kind = static_cast<AugmentKind>(k);
    op.probability = 0.0;
    op.lo = 0.0;
    op.hi = op.kind == AugmentKind::shear ? 0.1 : 1.0;
    pipeline.ops.push_back(op);
  }
  const Image out = apply(pipeline, img, 123);
  CHECK(out.width == img.width);
  CHECK(out.height == img.height);
  CHECK(out.pixels == img.pixels);
}

TEST_CASE("salt and pepper flips the configured fraction of pixels") {
  const Image img = gray_image(400, 250, 128);  // 1e5 pixels
  const Image out =
      apply(single_op(AugmentKind::salt_pepper, 0.05, 0.05), img, 99);
  int flipped = 0;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    if (out.pixels[i] != 128) {
      ++flipped;
      CHECK((out.pixels[i] == 0 || out.pixels[i] == 255));
    }
  }
  const double fraction = flipped / 1e5;
  CHECK(fraction > 0.045);
  CHECK(fraction < 0.055);
}

TEST_CASE("gaussian noise at sigma 10 leaves a residual standard deviation near 10") {
  const Image img = gray_image(1000, 1000, 128);
  const Image out = apply(single_op(AugmentKind::gaussian_noise, 10.0, 10.0), img, 7);
  double sum = 0.0, sum_sq = 0.0;
  for (unsigned char p : out.pixels) {
    const double r = static_cast<double>(p) - 128.0;
    sum += r;
    sum_sq += r * r;
  }
  const double n = static_cast<double>(out.pixels.size());
  const double mean = sum / n;
  const double stddev = std::sqrt(sum_sq / n - mean * mean);
  CHECK(stddev > 9.0);
  CHECK(stddev < 11.0);
  CHECK(std::abs(mean) < 0.1);
}

TEST_CASE("additive noise clamps instead of wrapping") {
  const Image bright = gray_image(100, 100, 250);
  const Image out = apply(single_op(AugmentKind::gaussian_noise, 30.0, 30.0), bright, 3);
  for (unsigned char p : out.pixels) CHECK(p >= 100);

  const Image dark = gray_image(100, 100, 5);
  const Image out2 = apply(single_op(AugmentKind::gaussian_noise, 30.0, 30.0), dark, 4);
  for (unsigned char p : out2.pixels) CHECK(p <= 155);
}

TEST_CASE("rotating forward then back recovers the image within interpolation blur") {
  const Image img = soften(render_text("EASTER-123", TextStyle{}));
  const Image there = apply(single_op(AugmentKind::rotate, 5.0, 5.0), img, 11);
  CHECK(there.width == img.width);
  CHECK(there.height == img.height);
  CHECK(mean_abs_diff(img, there) > 0.0);
  const Image back = apply(single_op(AugmentKind::rotate, -5.0, -5.0), there, 12);
  CHECK(mean_abs_diff(img, back) < 8.0);
}

TEST_CASE("shearing forward then back recovers the image within interpolation blur") {
  const Image img = soften(render_text("slope", TextStyle{}));
  const Image there = apply(single_op(AugmentKind::shear, 0.2, 0.2), img, 21);
  CHECK(there.width == img.width);
  const Image back = apply(single_op(AugmentKind::shear, -0.2, -0.2), there, 22);
  CHECK(mean_abs_diff(img, back) < 8.0);
}

TEST_CASE("pad_edges grows the canvas and preserves the interior bit-exactly") {
  const Image img = render_text("pad", TextStyle{});

  const Image same = pad_edges(img, 0, 0, 0, 0);
  CHECK(same.pixels == img.pixels);

  const Image padded = pad_edges(img, 1, 1, 1, 1);
  CHECK(padded.width == img.width + 2);
  CHECK(padded.height == img.height + 2);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      CHECK(padded.at(y + 1, x + 1) == img.at(y, x));
    }
  }
  for (int x = 0; x < padded.width; ++x) {
    CHECK(padded.at(0, x) == 255);
    CHECK(padded.at(padded.height - 1, x) == 255);
  }

  const Image lop = pad_edges(img, 3, 0, 0, 7, 17);
  CHECK(lop.height == img.height + 3);
  CHECK(lop.width == img.width + 7);
  CHECK(lop.at(0, 0) == 17);

  CHECK_THROWS_AS(pad_edges(img, -1, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("the pad_edges op is the only one that changes dimensions") {
  const Image img = render_text("dims", TextStyle{});
  for (int k = 0; k <= static_cast<int>(AugmentKind::morph_erode); ++k) {
    const auto kind = static_cast<AugmentKind>(k);
    const bool is_pad = kind == AugmentKind::pad_edges;
    double lo = 1.0, hi = 2.0;
    if (kind == AugmentKind::rotate) lo = hi = 3.0;
    if (kind == AugmentKind::shear) lo = hi = 0.1;
    if (kind == AugmentKind::salt_pepper || kind == AugmentKind::speckle) lo = hi = 0.05;
    const Image out = apply(single_op(kind, lo, hi), img, 5);
    if (is_pad) {
      CHECK(out.width >= img.width + 2);
      CHECK(out.height >= img.height + 2);
    } else {
      INFO("kind: ", augment_kind_name(kind));
      CHECK(out.width == img.width);
      CHECK(out.height == img.height);
    }
  }
}

TEST_CASE("morphology thickens or thins strokes") {
  const Image img = render_text("bold", TextStyle{});
  const int base = ink_pixels(img);
  const Image dilated = apply(single_op(AugmentKind::morph_dilate, 1, 1), img, 1);
  const Image eroded = apply(single_op(AugmentKind::morph_erode, 1, 1), img, 2);
  CHECK(ink_pixels(dilated) > base);
  CHECK(ink_pixels(eroded) < base);
  CHECK(ink_pixels(eroded) > 0);  // strokes survive a radius-1 thinning
}

TEST_CASE("random lines add ink strokes") {
  const Image img = gray_image(120, 40, 255);
  const Image out = apply(single_op(AugmentKind::random_lines, 2, 2), img, 9);
  CHECK(ink_pixels(out) >= 2);
}

TEST_CASE("identical seeds give identical bytes and different seeds diverge") {
  const Image img = render_text("seeds", TextStyle{});
  AugmentPipeline pipeline = single_op(AugmentKind::gaussian_noise, 5.0, 15.0, 0.8);
  pipeline.ops.push_back(single_op(AugmentKind::rotate, -4.0, 4.0, 0.5).ops[0]);
  pipeline.ops.push_back(single_op(AugmentKind::pad_edges, 0.0, 4.0, 0.5).ops[0]);

  const Image a = apply(pipeline, img, 1234);
  const Image b = apply(pipeline, img, 1234);
  CHECK(a.width == b.width);
  CHECK(a.pixels == b.pixels);

  const Image c = apply(pipeline, img, 1235);
  CHECK((c.width != a.width || c.pixels != a.pixels));
}

TEST_CASE("op validation enforces the documented bounds") {
  AugmentOp op;
  op.kind = AugmentKind::rotate;
  op.lo = -3.0;
  op.hi = 3.0;
  op.probability = 1.5;
  CHECK_THROWS_AS(validate_augment_op(op), std::invalid_argument);
  op.probability = 0.5;
  validate_augment_op(op);

  op.hi = 11.0;
  CHECK_THROWS_AS(validate_augment_op(op), std::invalid_argument);
  op.lo = 5.0;
  op.hi = 4.0;
  CHECK_THROWS_AS(validate_augment_op(op), std::invalid_argument);

  op.kind = AugmentKind::shear;
  op.lo = -0.4;
  op.hi = 0.2;
  CHECK_THROWS_AS(validate_augment_op(op), std::invalid_argument);

  op.kind = AugmentKind::salt_pepper;
  op.lo = 0.5;
  op.hi = 1.2;
  CHECK_THROWS_AS(validate_augment_op(op), std::invalid_argument);

  op.kind = AugmentKind::gaussian_noise;
  op.lo = -1.0;
  op.hi = 5.0;
  CHECK_THROWS_AS(validate_augment_op(op), std::invalid_argument);
}

TEST_CASE("pipelines parse from JSON and round-trip") {
  const std::string json = R"([
    {"kind": "gaussian_noise", "probability": 0.25, "range": [4, 12]},
    {"kind": "rotate", "probability": 0.3, "range": [-2.5, 2.5]},
    {"kind": "morph_dilate", "probability": 0.1, "range": [1, 1]}
  ])";
  const AugmentPipeline p = parse_augment_pipeline(json);
  REQUIRE(p.ops.size() == 3);
  CHECK(p.ops[0].kind == AugmentKind::gaussian_noise);
  CHECK(p.ops[0].probability == doctest::Approx(0.25));
  CHECK(p.ops[0].lo == doctest::Approx(4.0));
  CHECK(p.ops[1].kind == AugmentKind::rotate);
  CHECK(p.ops[2].hi == doctest::Approx(1.0));

  const AugmentPipeline again = parse_augment_pipeline(augment_pipeline_to_json(p));
  REQUIRE(again.ops.size() == p.ops.size());
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    CHECK(again.ops[i].kind == p.ops[i].kind);
    CHECK(again.ops[i].probability == doctest::Approx(p.ops[i].probability));
    CHECK(again.ops[i].lo == doctest::Approx(p.ops[i].lo));
    CHECK(again.ops[i].hi == doctest::Approx(p.ops[i].hi));
  }
}

TEST_CASE("malformed pipeline JSON is rejected") {
  CHECK_THROWS_AS(parse_augment_pipeline("not json"), std::invalid_argument);
  CHECK_THROWS_AS(parse_augment_pipeline(R"({"kind": "rotate"})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_augment_pipeline(R"([{"probability": 0.5}])"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_augment_pipeline(R"([{"kind": "fog"}])"),
                       doctest::Contains("fog"), std::invalid_argument);
  CHECK_THROWS_AS(parse_augment_pipeline(R"([{"kind": "rotate", "range": [1]}])"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_augment_pipeline(R"([{"kind": "rotate", "range": [-20, 20]}])"),
                  std::invalid_argument);
}

TEST_CASE("ops degrade gracefully on tiny images") {
  const Image tiny(1, 1, 128);
  for (int k = 0; k <= static_cast<int>(AugmentKind::morph_erode); ++k) {
    const auto kind = static_cast<AugmentKind>(k);
    double lo = 1.0, hi = 1.0;
    if (kind == AugmentKind::rotate) lo = hi = 5.0;
    if (kind == AugmentKind::shear) lo = hi = 0.2;
    if (kind == AugmentKind::salt_pepper || kind == AugmentKind::speckle) lo = hi = 0.1;
    const Image out = apply(single_op(kind, lo, hi), tiny, 6);
    CHECK(out.width >= 1);
    CHECK(out.height >= 1);
  }
}
