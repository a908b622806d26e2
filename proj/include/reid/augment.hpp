#pragma once

/** \file augment.hpp
 *  \brief Randomised image augmentation for training rasters.
 *
 * Each enabled strategy fires independently with its own probability, in
 * this order: mirror, shift, rotation, blur, colour-channel noise, per-pixel
 * noise, pixel dropout. Output pixels are clamped to [0, 1].
 */

#include "reid/image.hpp"
#include "reid/numeric.hpp"

namespace reid {

struct AugmentStrategy {
  bool enabled = false;
  /// Chance the strategy is applied to a given image.
  double probability = 0.5;
  /// Strategy-specific size; see AugmentConfig.
  double magnitude = 0.0;
};

struct AugmentConfig {
  AugmentStrategy mirror{true, 0.5, 0.0};
  /// magnitude: largest shift in pixels along each axis.
  AugmentStrategy shift{true, 0.5, 2.0};
  /// magnitude: largest rotation in degrees, either direction.
  AugmentStrategy rotation{true, 0.5, 10.0};
  /// magnitude: std of one Gaussian offset per channel.
  AugmentStrategy colour_noise{true, 0.5, 0.05};
  /// magnitude: std of i.i.d. Gaussian noise per pixel value.
  AugmentStrategy pixel_noise{true, 0.5, 0.02};
  /// 3x3 box filter; magnitude unused.
  AugmentStrategy blur{true, 0.5, 0.0};
  /// magnitude: fraction of pixels set to 0.
  AugmentStrategy dropout{true, 0.5, 0.05};

  /// All strategies off.
  static AugmentConfig none();
  [[nodiscard]] bool any_enabled() const noexcept;
  /// Throws ConfigError naming the strategy unless probabilities lie in [0, 1]
  /// and magnitudes are finite and nonnegative (dropout fraction at most 1).
  void validate() const;
};

[[nodiscard]] Raster augment(const Raster& image, const AugmentConfig& cfg, RngStream& rng);

// Deterministic building blocks.
[[nodiscard]] Raster mirror_horizontal(const Raster& image);
/// Positive dx moves content right, positive dy down; vacated pixels replicate the edge.
[[nodiscard]] Raster shift(const Raster& image, int dx, int dy);
/// Nearest-neighbour rotation about the centre; samples outside the source clamp to the edge.
[[nodiscard]] Raster rotate(const Raster& image, double degrees);
[[nodiscard]] Raster box_blur(const Raster& image);

}  // namespace reid
