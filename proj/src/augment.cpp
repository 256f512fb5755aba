#include "platenet/augment.hpp"

#include <algorithm>
#include <cmath>

#include "platenet/errors.hpp"

namespace platenet {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

void check_single_channel(const Tensor& image) {
  if (image.shape().rank() != 3 || image.shape()[2] != 1) {
    throw ShapeError("augment expects (H,W,1) input, got " + image.shape().to_string());
  }
}

}  // namespace

AugmentConfig AugmentConfig::none() {
  AugmentConfig cfg;
  cfg.rotation_range = 0.0f;
  cfg.width_shift_range = 0.0f;
  cfg.height_shift_range = 0.0f;
  cfg.shear_range = 0.0f;
  cfg.zoom_range = 0.0f;
  cfg.horizontal_flip = false;
  cfg.vertical_flip = false;
  cfg.brightness_lo = 1.0f;
  cfg.brightness_hi = 1.0f;
  return cfg;
}

void AugmentConfig::validate() const {
  if (rotation_range < 0 || width_shift_range < 0 || height_shift_range < 0 ||
      shear_range < 0 || zoom_range < 0) {
    throw ArgumentError("augment ranges must be nonnegative");
  }
  if (brightness_hi < brightness_lo) {
    throw ArgumentError("brightness interval is empty");
  }
  if (rescale <= 0) throw ArgumentError("rescale must be positive");
}

AugmentParams sample_params(const AugmentConfig& config, int width, int height, Rng& rng) {
  config.validate();
  AugmentParams p;
  p.rotation_deg = rng.uniform(-config.rotation_range, config.rotation_range);
  p.shift_x = rng.uniform(-config.width_shift_range, config.width_shift_range) *
              static_cast<float>(width);
  p.shift_y = rng.uniform(-config.height_shift_range, config.height_shift_range) *
              static_cast<float>(height);
  p.shear_deg = rng.uniform(-config.shear_range, config.shear_range);
  p.zoom_x = rng.uniform(1.0f - config.zoom_range, 1.0f + config.zoom_range);
  p.zoom_y = rng.uniform(1.0f - config.zoom_range, 1.0f + config.zoom_range);
  p.flip_h = config.horizontal_flip && rng.coin();
  p.flip_v = config.vertical_flip && rng.coin();
  p.brightness = rng.uniform(config.brightness_lo, config.brightness_hi);
  p.rescale = config.rescale;
  return p;
}

Tensor apply_augment(const Tensor& image, const AugmentParams& params) {
  check_single_channel(image);
  const int height = image.shape()[0];
  const int width = image.shape()[1];
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;

  // Inverse of the forward map shift(zoom(shear(rotate(p)))) in centered
  // coordinates; x right, y down.
  const double theta = params.rotation_deg * kDegToRad;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double tan_shear = std::tan(params.shear_deg * kDegToRad);
  const double inv_zx = 1.0 / params.zoom_x;
  const double inv_zy = 1.0 / params.zoom_y;

  Tensor warped(image.shape());
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      double x = (col - cx) - params.shift_x;
      double y = (row - cy) - params.shift_y;
      x *= inv_zx;
      y *= inv_zy;
      x -= tan_shear * y;  // forward shear is x' = x + tan(phi) * y
      const double xs = cos_t * x + sin_t * y;
      const double ys = -sin_t * x + cos_t * y;
      const int src_col = std::clamp(round_half_up(xs + cx), 0, width - 1);
      const int src_row = std::clamp(round_half_up(ys + cy), 0, height - 1);
      warped.at(row, col, 0) = image.at(src_row, src_col, 0);
    }
  }

  if (params.flip_h) {
    for (int row = 0; row < height; ++row) {
      for (int col = 0; col < width / 2; ++col) {
        std::swap(warped.at(row, col, 0), warped.at(row, width - 1 - col, 0));
      }
    }
  }
  if (params.flip_v) {
    for (int row = 0; row < height / 2; ++row) {
      for (int col = 0; col < width; ++col) {
        std::swap(warped.at(row, col, 0), warped.at(height - 1 - row, col, 0));
      }
    }
  }

  Tensor out(image.shape());
  for (size_t i = 0; i < out.size(); ++i) {
    const float bright = std::clamp(warped[i] * params.brightness, 0.0f, 255.0f);
    out[i] = static_cast<float>(static_cast<double>(bright) * params.rescale);
  }
  return out;
}

Tensor passthrough(const Tensor& image, double rescale) {
  Tensor out(image.shape());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(image[i]) * rescale);
  }
  return out;
}

}  // namespace platenet
