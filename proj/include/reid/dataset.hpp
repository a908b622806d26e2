#pragma once

/** \file dataset.hpp
 *  \brief Manifests resolved into model-ready feature vectors with dense labels.
 */

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "reid/image.hpp"
#include "reid/manifest.hpp"
#include "reid/mining.hpp"
#include "reid/numeric.hpp"

namespace reid {

struct LabeledFeatures {
  std::vector<Vector> features;
  std::vector<Label> labels;
  /// label -> individual id
  std::vector<std::string> label_names;
  /// Set when every sample is an image of this shape; enables augmentation.
  std::optional<RasterShape> raster_shape;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  [[nodiscard]] std::size_t num_individuals() const noexcept { return label_names.size(); }
  [[nodiscard]] std::size_t feature_dim() const noexcept {
    return features.empty() ? 0 : features.front().dim();
  }
  /// Sample indices grouped by label.
  [[nodiscard]] std::vector<std::vector<std::size_t>> indices_by_label() const;
};

/**
 * Labels follow sorted individual id. Images are read relative to
 * manifest.base_dir and flattened; a manifest must not mix inline features
 * with images, and all samples must share one dimension.
 */
[[nodiscard]] LabeledFeatures load_features(const Manifest& manifest);

}  // namespace reid
