#include "reid/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "reid/error.hpp"

namespace reid {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      if (!token.empty()) return token;
    } else {
      token.push_back(static_cast<char>(ch));
    }
    ch = in.get();
  }
  if (token.empty()) throw DataError("pnm header truncated");
  return token;
}

std::size_t header_number(std::istream& in, const char* field) {
  const std::string token = header_token(in);
  if (token.empty() || !std::all_of(token.begin(), token.end(), ::isdigit) || token.size() > 9) {
    throw DataError(std::string("pnm header: bad ") + field + " '" + token + "'");
  }
  return std::stoul(token);
}

}  // namespace

Raster::Raster(RasterShape shape, double fill) : shape_(shape), pixels_(shape.size(), fill) {}

Raster::Raster(RasterShape shape, std::vector<double> pixels)
    : shape_(shape), pixels_(std::move(pixels)) {
  if (pixels_.size() != shape_.size()) {
    throw DimensionError("raster " + std::to_string(shape_.width) + "x" +
                         std::to_string(shape_.height) + "x" + std::to_string(shape_.channels) +
                         " given " + std::to_string(pixels_.size()) + " values");
  }
}

Raster Raster::unflatten(const Vector& features, RasterShape shape) {
  return Raster(shape, features.storage());
}

Raster read_pnm(std::istream& in) {
  // The header's final token is followed by exactly one whitespace byte,
  // which header_token consumes.
  const std::string magic = header_token(in);
  std::size_t channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw DataError("unsupported image format '" + magic + "' (need P5 or P6)");
  }
  const std::size_t width = header_number(in, "width");
  const std::size_t height = header_number(in, "height");
  const std::size_t maxval = header_number(in, "maxval");
  if (width == 0 || height == 0) throw DataError("pnm image has zero size");
  if (maxval != 255) throw DataError("pnm maxval must be 255, got " + std::to_string(maxval));

  const RasterShape shape{width, height, channels};
  std::vector<unsigned char> bytes(shape.size());
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw DataError("pnm pixel data truncated");
  std::vector<double> pixels(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) pixels[i] = bytes[i] / 255.0;
  return Raster(shape, std::move(pixels));
}

Raster load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  try {
    return read_pnm(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_pnm(std::ostream& out, const Raster& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw DataError("pnm output needs 1 or 3 channels");
  }
  out << (image.channels() == 1 ? "P5" : "P6") << '\n'
      << image.width() << ' ' << image.height() << "\n255\n";
  for (double v : image.pixels()) {
    const double scaled = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
    out.put(static_cast<char>(static_cast<unsigned char>(scaled)));
  }
  if (!out) throw DataError("failed writing image");
}

void save_pnm(const std::filesystem::path& path, const Raster& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_pnm(out, image);
}

}  // namespace reid
