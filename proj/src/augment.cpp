#include "reid/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "reid/error.hpp"

namespace reid {

namespace {

std::size_t clamp_index(long v, std::size_t size) {
  if (v < 0) return 0;
  if (static_cast<std::size_t>(v) >= size) return size - 1;
  return static_cast<std::size_t>(v);
}

void check_strategy(const AugmentStrategy& s, const char* name, double max_magnitude) {
  const std::string field = std::string("augment.") + name;
  if (!(s.probability >= 0.0 && s.probability <= 1.0)) {
    throw ConfigError(field + "_probability must lie in [0, 1]");
  }
  if (!std::isfinite(s.magnitude) || s.magnitude < 0.0 || s.magnitude > max_magnitude) {
    throw ConfigError(field + "_magnitude out of range");
  }
}

bool fires(const AugmentStrategy& s, RngStream& rng) {
  return s.enabled && s.probability > 0.0 && rng.bernoulli(s.probability);
}

}  // namespace

AugmentConfig AugmentConfig::none() {
  AugmentConfig cfg;
  for (AugmentStrategy* s : {&cfg.mirror, &cfg.shift, &cfg.rotation, &cfg.colour_noise,
                             &cfg.pixel_noise, &cfg.blur, &cfg.dropout}) {
    s->enabled = false;
  }
  return cfg;
}

bool AugmentConfig::any_enabled() const noexcept {
  return mirror.enabled || shift.enabled || rotation.enabled || colour_noise.enabled ||
         pixel_noise.enabled || blur.enabled || dropout.enabled;
}

void AugmentConfig::validate() const {
  constexpr double kUnbounded = 1e300;
  check_strategy(mirror, "mirror", kUnbounded);
  check_strategy(shift, "shift", kUnbounded);
  check_strategy(rotation, "rotation", kUnbounded);
  check_strategy(colour_noise, "colour_noise", kUnbounded);
  check_strategy(pixel_noise, "pixel_noise", kUnbounded);
  check_strategy(blur, "blur", kUnbounded);
  check_strategy(dropout, "dropout", 1.0);
}

Raster mirror_horizontal(const Raster& image) {
  Raster out(image.shape());
  const std::size_t w = image.width();
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < image.channels(); ++c) out.at(x, y, c) = image.at(w - 1 - x, y, c);
    }
  }
  return out;
}

Raster shift(const Raster& image, int dx, int dy) {
  Raster out(image.shape());
  for (std::size_t y = 0; y < image.height(); ++y) {
    const std::size_t sy = clamp_index(static_cast<long>(y) - dy, image.height());
    for (std::size_t x = 0; x < image.width(); ++x) {
      const std::size_t sx = clamp_index(static_cast<long>(x) - dx, image.width());
      for (std::size_t c = 0; c < image.channels(); ++c) out.at(x, y, c) = image.at(sx, sy, c);
    }
  }
  return out;
}

Raster rotate(const Raster& image, double degrees) {
  if (degrees == 0.0) return image;
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double cx = (static_cast<double>(image.width()) - 1.0) / 2.0;
  const double cy = (static_cast<double>(image.height()) - 1.0) / 2.0;
  Raster out(image.shape());
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) {
      // Inverse map: rotate the destination coordinate back by -theta.
      const double rx = static_cast<double>(x) - cx;
      const double ry = static_cast<double>(y) - cy;
      const double src_x = cos_t * rx + sin_t * ry + cx;
      const double src_y = -sin_t * rx + cos_t * ry + cy;
      const std::size_t sx = clamp_index(std::lround(src_x), image.width());
      const std::size_t sy = clamp_index(std::lround(src_y), image.height());
      for (std::size_t c = 0; c < image.channels(); ++c) out.at(x, y, c) = image.at(sx, sy, c);
    }
  }
  return out;
}

Raster box_blur(const Raster& image) {
  Raster out(image.shape());
  const long w = static_cast<long>(image.width());
  const long h = static_cast<long>(image.height());
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < image.channels(); ++c) {
        double acc = 0.0;
        for (long oy = -1; oy <= 1; ++oy) {
          for (long ox = -1; ox <= 1; ++ox) {
            acc += image.at(clamp_index(x + ox, image.width()), clamp_index(y + oy, image.height()), c);
          }
        }
        out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c) = acc / 9.0;
      }
    }
  }
  return out;
}

Raster augment(const Raster& image, const AugmentConfig& cfg, RngStream& rng) {
  Raster out = image;
  if (fires(cfg.mirror, rng)) out = mirror_horizontal(out);
  if (fires(cfg.shift, rng)) {
    const auto reach = static_cast<long>(std::floor(cfg.shift.magnitude));
    if (reach > 0) {
      const auto span = static_cast<std::size_t>(2 * reach + 1);
      const int dx = static_cast<int>(static_cast<long>(rng.uniform_index(span)) - reach);
      const int dy = static_cast<int>(static_cast<long>(rng.uniform_index(span)) - reach);
      out = shift(out, dx, dy);
    }
  }
  if (fires(cfg.rotation, rng) && cfg.rotation.magnitude > 0.0) {
    out = rotate(out, rng.uniform(-cfg.rotation.magnitude, cfg.rotation.magnitude));
  }
  if (fires(cfg.blur, rng)) out = box_blur(out);
  if (fires(cfg.colour_noise, rng) && cfg.colour_noise.magnitude > 0.0) {
    std::vector<double> offsets(out.channels());
    for (double& o : offsets) o = rng.normal(0.0, cfg.colour_noise.magnitude);
    auto& px = out.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] += offsets[i % out.channels()];
  }
  if (fires(cfg.pixel_noise, rng) && cfg.pixel_noise.magnitude > 0.0) {
    for (double& v : out.pixels()) v += rng.normal(0.0, cfg.pixel_noise.magnitude);
  }
  if (fires(cfg.dropout, rng) && cfg.dropout.magnitude > 0.0) {
    for (std::size_t y = 0; y < out.height(); ++y) {
      for (std::size_t x = 0; x < out.width(); ++x) {
        if (!rng.bernoulli(cfg.dropout.magnitude)) continue;
        for (std::size_t c = 0; c < out.channels(); ++c) out.at(x, y, c) = 0.0;
      }
    }
  }
  for (double& v : out.pixels()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace reid
