#pragma once

#include "platenet/rng.hpp"
#include "platenet/tensor.hpp"

namespace platenet {

// Per-image random transform ranges. Defaults are the training pipeline's
// standard settings; AugmentConfig::none() disables everything but the
// 1/255 rescale.
struct AugmentConfig {
  float rotation_range = 90.0f;       // degrees, symmetric about 0
  float width_shift_range = 0.05f;    // fraction of width
  float height_shift_range = 0.05f;   // fraction of height
  float shear_range = 0.05f;          // degrees of x-shear
  float zoom_range = 0.05f;           // zoom factors drawn from [1-r, 1+r]
  bool horizontal_flip = true;
  bool vertical_flip = true;
  float brightness_lo = 0.75f;
  float brightness_hi = 1.25f;
  double rescale = 1.0 / 255.0;

  static AugmentConfig none();
  void validate() const;
};

// One concrete sampled transform. Shifts are in pixels.
struct AugmentParams {
  float rotation_deg = 0.0f;
  float shift_x = 0.0f;
  float shift_y = 0.0f;
  float shear_deg = 0.0f;
  float zoom_x = 1.0f;
  float zoom_y = 1.0f;
  bool flip_h = false;
  bool flip_v = false;
  float brightness = 1.0f;
  double rescale = 1.0 / 255.0;
};

// Draws every field uniformly and independently from its configured
// interval; flips are fair coin flips when enabled.
AugmentParams sample_params(const AugmentConfig& config, int width, int height, Rng& rng);

// Pipeline on a raw 0..255 single-channel (H,W,1) image:
//   1. warp by the composed affine (rotate, shear, zoom, then shift, about
//      the image center), nearest-neighbor sampling with round-half-up
//      source coordinates and nearest-edge fill
//   2. flips
//   3. brightness multiply, clamped to [0,255]
//   4. rescale into [0,1]
Tensor apply_augment(const Tensor& image, const AugmentParams& params);

// Rescale only; callers pass raw 0..255 images exactly once.
Tensor passthrough(const Tensor& image, double rescale = 1.0 / 255.0);

}  // namespace platenet
