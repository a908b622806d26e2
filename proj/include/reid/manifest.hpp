#pragma once

/** \file manifest.hpp
 *  \brief Dataset manifests: CSV with header `sample,individual_id`.
 *
 * The `sample` column is either a path to a PGM/PPM image, relative to the
 * manifest's directory, or `inline:` followed by semicolon-separated reals.
 */

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reid/numeric.hpp"

namespace reid {

inline constexpr std::string_view kInlinePrefix = "inline:";

struct ManifestEntry {
  std::string sample_ref;
  std::string individual_id;
  /// Parsed features for `inline:` samples; empty for image paths.
  std::optional<Vector> features;

  [[nodiscard]] bool is_inline() const noexcept { return features.has_value(); }
  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::string species_tag;
  /// Directory that relative image paths resolve against.
  std::filesystem::path base_dir;

  [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
  /// Image count per individual, ordered by id.
  [[nodiscard]] std::map<std::string, std::size_t> counts_by_individual() const;
  [[nodiscard]] std::size_t num_individuals() const { return counts_by_individual().size(); }

  /// Append an inline-feature sample.
  void add_inline(const Vector& features, std::string individual_id);
  /// Throws DataError on an empty id or a repeated image path.
  void validate() const;
};

/// `inline:` + shortest round-trip text of each value, joined by ';'.
[[nodiscard]] std::string format_inline(const Vector& features);
[[nodiscard]] Vector parse_inline(std::string_view text);

/// Parses manifest CSV. `source` names the input in error messages.
[[nodiscard]] Manifest parse_manifest(std::istream& in, const std::string& source = "manifest");
/// Species tag is the file stem; base_dir is the file's directory.
[[nodiscard]] Manifest load_manifest(const std::filesystem::path& path);

void write_manifest(std::ostream& out, const Manifest& manifest);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Shortest decimal text that parses back to exactly `value`.
[[nodiscard]] std::string format_real(double value);

}  // namespace reid
