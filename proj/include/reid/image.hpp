#pragma once

/** \file image.hpp
 *  \brief Rasters and binary PGM/PPM (P5/P6, maxval 255) I/O.
 *
 * Pixel values are stored as reals in [0, 1]. Flattening is row-major with
 * channels interleaved per pixel, which is the model's input contract.
 */

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "reid/numeric.hpp"

namespace reid {

struct RasterShape {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;

  [[nodiscard]] std::size_t size() const noexcept { return width * height * channels; }
  bool operator==(const RasterShape&) const = default;
};

class Raster {
 public:
  Raster() = default;
  Raster(RasterShape shape, double fill = 0.0);
  Raster(RasterShape shape, std::vector<double> pixels);

  [[nodiscard]] const RasterShape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t width() const noexcept { return shape_.width; }
  [[nodiscard]] std::size_t height() const noexcept { return shape_.height; }
  [[nodiscard]] std::size_t channels() const noexcept { return shape_.channels; }

  double& at(std::size_t x, std::size_t y, std::size_t c) noexcept {
    return pixels_[(y * shape_.width + x) * shape_.channels + c];
  }
  double at(std::size_t x, std::size_t y, std::size_t c) const noexcept {
    return pixels_[(y * shape_.width + x) * shape_.channels + c];
  }

  [[nodiscard]] const std::vector<double>& pixels() const noexcept { return pixels_; }
  std::vector<double>& pixels() noexcept { return pixels_; }

  [[nodiscard]] Vector flatten() const { return Vector(pixels_); }
  static Raster unflatten(const Vector& features, RasterShape shape);

  bool operator==(const Raster&) const = default;

 private:
  RasterShape shape_{};
  std::vector<double> pixels_;
};

/// Reads P5 (grey) or P6 (RGB) with maxval 255.
[[nodiscard]] Raster read_pnm(std::istream& in);
[[nodiscard]] Raster load_pnm(const std::filesystem::path& path);
/// Writes P5 for one channel, P6 for three; values are rounded from [0, 1].
void write_pnm(std::ostream& out, const Raster& image);
void save_pnm(const std::filesystem::path& path, const Raster& image);

}  // namespace reid
