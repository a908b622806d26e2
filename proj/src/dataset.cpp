#include "reid/dataset.hpp"

#include <map>

#include "reid/error.hpp"

namespace reid {

std::vector<std::vector<std::size_t>> LabeledFeatures::indices_by_label() const {
  std::vector<std::vector<std::size_t>> groups(label_names.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    groups.at(static_cast<std::size_t>(labels[i])).push_back(i);
  }
  return groups;
}

LabeledFeatures load_features(const Manifest& manifest) {
  LabeledFeatures out;
  std::map<std::string, Label> label_of;
  for (const auto& e : manifest.entries) label_of.emplace(e.individual_id, 0);
  for (auto& [id, label] : label_of) {
    label = static_cast<Label>(out.label_names.size());
    out.label_names.push_back(id);
  }

  std::size_t inline_count = 0;
  for (const auto& e : manifest.entries) {
    if (e.is_inline()) {
      ++inline_count;
      out.features.push_back(*e.features);
    } else {
      Raster image = load_pnm(manifest.base_dir / e.sample_ref);
      if (!out.raster_shape) {
        out.raster_shape = image.shape();
      } else if (*out.raster_shape != image.shape()) {
        throw DataError("image " + e.sample_ref + " differs in size from earlier images");
      }
      out.features.push_back(image.flatten());
    }
    out.labels.push_back(label_of.at(e.individual_id));
    if (out.features.back().dim() != out.features.front().dim()) {
      throw DataError("sample " + std::to_string(out.features.size() - 1) + " has dim " +
                      std::to_string(out.features.back().dim()) + ", expected " +
                      std::to_string(out.features.front().dim()));
    }
  }
  if (inline_count != 0 && inline_count != manifest.entries.size()) {
    throw DataError("manifest mixes inline features and image paths");
  }
  return out;
}

}  // namespace reid
