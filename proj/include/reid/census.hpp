#pragma once

/** \file census.hpp
 *  \brief Open-set gallery for population estimation from a stream of sightings.
 *
 * The gallery starts empty. Each sighting is compared against every enrolled
 * individual, whose score is the smallest distance to any of its stored
 * exemplars. If the best score is within the match threshold the sighting is
 * attributed to that individual (and stored as a further exemplar while there
 * is room); otherwise it enrols a new individual.
 */

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reid/model.hpp"
#include "reid/numeric.hpp"

namespace reid {

inline constexpr std::size_t kDefaultMaxExemplars = 5;

struct GalleryEntry {
  std::size_t id = 0;
  std::vector<Vector> exemplars;
};

enum class CensusOutcome { matched, enrolled };

struct CensusDecision {
  CensusOutcome outcome = CensusOutcome::enrolled;
  std::size_t gallery_id = 0;
  /// Distance to the nearest enrolled exemplar; +inf for an empty gallery.
  double min_distance = 0.0;
};

class Gallery {
 public:
  /// threshold >= 0 (may be +inf); max_exemplars >= 1.
  explicit Gallery(double match_threshold, std::size_t max_exemplars = kDefaultMaxExemplars);

  CensusDecision step(const Vector& sighting);

  [[nodiscard]] std::size_t population() const noexcept { return entries_.size(); }
  [[nodiscard]] const std::vector<GalleryEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] double match_threshold() const noexcept { return threshold_; }
  [[nodiscard]] std::size_t max_exemplars() const noexcept { return max_exemplars_; }

 private:
  double threshold_;
  std::size_t max_exemplars_;
  std::size_t dim_ = 0;
  std::vector<GalleryEntry> entries_;
};

/// Free-function form of Gallery::step.
inline CensusDecision census_step(Gallery& gallery, const Vector& sighting) {
  return gallery.step(sighting);
}

struct Sighting {
  Vector features;
  /// Ground-truth identity, when known.
  std::optional<std::string> truth;
};

struct CensusReport {
  std::size_t estimated_population = 0;
  std::optional<std::size_t> true_population;
  std::vector<CensusDecision> decisions;
  /// Population after each sighting.
  std::vector<std::size_t> population_curve;
  /// Pairwise precision/recall of "same individual" assignments; set when
  /// every sighting carries truth.
  std::optional<double> pair_precision;
  std::optional<double> pair_recall;
};

/// Embeds each sighting with `net` (identity when null) and folds the stream through a gallery.
[[nodiscard]] CensusReport run_census(std::span<const Sighting> stream, double threshold,
                                      const EmbeddingNet* net,
                                      std::size_t max_exemplars = kDefaultMaxExemplars);

/// CSV `index,decision,gallery_id,min_distance`, then `summary,<key>,<value>,` rows.
void write_census_report(std::ostream& out, const CensusReport& report);

}  // namespace reid
