#include "reid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "reid/error.hpp"

namespace reid {

namespace {

constexpr int kPlacementAttempts = 5000;

std::string padded_id(const std::string& prefix, std::size_t index, std::size_t total) {
  std::string digits = std::to_string(index);
  const std::size_t width = std::max<std::size_t>(3, std::to_string(total - 1).size());
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_individuals == 0) throw ConfigError("synth.individuals must be positive");
  if (images_per_individual == 0) throw ConfigError("synth.images must be positive");
  if (feature_dim == 0) throw ConfigError("synth.dim must be positive");
  if (!std::isfinite(cluster_spread) || cluster_spread < 0.0) {
    throw ConfigError("synth.spread must be finite and nonnegative");
  }
  if (!std::isfinite(inter_cluster_distance) || inter_cluster_distance < 0.0) {
    throw ConfigError("synth.separation must be finite and nonnegative");
  }
  if (nuisance_dims > feature_dim) throw ConfigError("synth.nuisance_dims exceeds synth.dim");
  if (!std::isfinite(nuisance_spread) || nuisance_spread < 0.0) {
    throw ConfigError("synth.nuisance_spread must be finite and nonnegative");
  }
  if (id_prefix.find_first_of(",\n") != std::string::npos) {
    throw ConfigError("synth id prefix may not contain commas or newlines");
  }
}

Manifest synth_dataset(const SynthConfig& cfg, RngStream& rng) {
  cfg.validate();
  const double diameter = std::sqrt(static_cast<double>(cfg.feature_dim));
  if (cfg.num_individuals > 1 && cfg.inter_cluster_distance > diameter) {
    throw ConfigError("synth.separation " + format_real(cfg.inter_cluster_distance) +
                      " cannot be met inside the unit cube of dim " +
                      std::to_string(cfg.feature_dim));
  }

  RngStream centre_rng = rng.derive(0);
  std::vector<Vector> centres;
  centres.reserve(cfg.num_individuals);
  const double min_sq = cfg.inter_cluster_distance * cfg.inter_cluster_distance;
  for (std::size_t i = 0; i < cfg.num_individuals; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      Vector c(cfg.feature_dim);
      for (double& v : c) v = centre_rng.uniform();
      placed = std::all_of(centres.begin(), centres.end(),
                           [&](const Vector& other) { return squared_distance(c, other) >= min_sq; });
      if (placed) centres.push_back(std::move(c));
    }
    if (!placed) {
      throw ConfigError("synth.separation " + format_real(cfg.inter_cluster_distance) +
                        " is infeasible for " + std::to_string(cfg.num_individuals) +
                        " individuals in dim " + std::to_string(cfg.feature_dim));
    }
  }

  Manifest manifest;
  manifest.species_tag = "synthetic";
  for (std::size_t i = 0; i < cfg.num_individuals; ++i) {
    RngStream sample_rng = rng.derive(1 + i);
    const std::string id = padded_id(cfg.id_prefix, i, cfg.num_individuals);
    for (std::size_t k = 0; k < cfg.images_per_individual; ++k) {
      Vector x = centres[i];
      for (std::size_t d = 0; d < x.dim(); ++d) {
        double stddev = cfg.cluster_spread;
        if (d < cfg.nuisance_dims) stddev = std::hypot(stddev, cfg.nuisance_spread);
        if (stddev > 0.0) x[d] += sample_rng.normal(0.0, stddev);
      }
      manifest.add_inline(x, id);
    }
  }
  return manifest;
}

Manifest synth_dataset(std::size_t num_individuals, std::size_t images_per_individual,
                       std::size_t feature_dim, double cluster_spread,
                       double inter_cluster_distance, RngStream& rng) {
  SynthConfig cfg;
  cfg.num_individuals = num_individuals;
  cfg.images_per_individual = images_per_individual;
  cfg.feature_dim = feature_dim;
  cfg.cluster_spread = cluster_spread;
  cfg.inter_cluster_distance = inter_cluster_distance;
  return synth_dataset(cfg, rng);
}

}  // namespace reid
