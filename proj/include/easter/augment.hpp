#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "easter/image.hpp"

namespace easter {

enum class AugmentKind {
  gaussian_noise,  // additive, sigma in pixels
  salt_pepper,     // fraction of pixels forced to 0 or 255
  speckle,         // multiplicative noise, sigma as a fraction
  random_lines,    // count of ink strokes
  pad_edges,       // per-edge padding in pixels
  rotate,          // degrees, same canvas
  shear,           // horizontal slope, same canvas
  morph_dilate,    // stroke thickening radius in pixels
  morph_erode,     // stroke thinning radius in pixels
};

const char* augment_kind_name(AugmentKind kind);
AugmentKind parse_augment_kind(const std::string& name);

// One perturbation: fires with `probability`, then draws its parameter
// uniformly from [lo, hi] (integer-valued kinds round the draw).
struct AugmentOp {
  AugmentKind kind = AugmentKind::gaussian_noise;
  double probability = 1.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Throws when the probability leaves [0, 1], the range is empty, or the
// range exceeds the kind's safe bounds (|rotation| <= 10 degrees,
// |shear| <= 0.3, salt_pepper density in [0, 1], nonnegative magnitudes).
void validate_augment_op(const AugmentOp& op);

struct AugmentPipeline {
  std::vector<AugmentOp> ops;
};

// Parses a JSON array of {kind, probability, range: [lo, hi]} objects.
AugmentPipeline parse_augment_pipeline(const std::string& json_text);
std::string augment_pipeline_to_json(const AugmentPipeline& pipeline);

// Grows the canvas by the given nonnegative pads; the original lands intact
// at offset (top, left).
Image pad_edges(const Image& image, int top, int bottom, int left, int right,
                std::uint8_t fill = 255);

// Runs each op in order; an op fires independently with its probability.
// Identical (pipeline, image, seed) triples produce identical bytes. Only
// pad_edges changes dimensions; rotation and shear resample into the same
// canvas with bilinear interpolation and white fill.
Image apply(const AugmentPipeline& pipeline, const Image& image, std::uint64_t sample_seed);

}  // namespace easter
