#pragma once

/** \file synth.hpp
 *  \brief Synthetic identity datasets: one Gaussian cluster per individual.
 */

#include <cstddef>
#include <string>

#include "reid/manifest.hpp"
#include "reid/numeric.hpp"

namespace reid {

struct SynthConfig {
  std::size_t num_individuals = 10;
  std::size_t images_per_individual = 20;
  std::size_t feature_dim = 16;
  /// Per-coordinate std of samples around their individual's centre.
  double cluster_spread = 0.05;
  /// Minimum Euclidean distance between any two centres.
  double inter_cluster_distance = 0.5;
  /// Leading coordinates that carry extra noise shared by every individual,
  /// i.e. directions a learned metric should discount. 0 disables.
  std::size_t nuisance_dims = 0;
  double nuisance_spread = 0.0;
  /// Ids are this prefix plus a zero-padded index.
  std::string id_prefix = "ind";

  void validate() const;
};

/**
 * Centres are drawn uniformly in the unit hypercube [0, 1]^dim by rejection
 * until every pair is at least inter_cluster_distance apart. Throws
 * ConfigError when the separation exceeds the cube's diameter or no placement
 * is found.
 *
 * Entries are grouped by individual, each row an `inline:` feature sample.
 */
[[nodiscard]] Manifest synth_dataset(const SynthConfig& cfg, RngStream& rng);

[[nodiscard]] Manifest synth_dataset(std::size_t num_individuals, std::size_t images_per_individual,
                                     std::size_t feature_dim, double cluster_spread,
                                     double inter_cluster_distance, RngStream& rng);

}  // namespace reid
