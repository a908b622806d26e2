#include "reid/mining.hpp"

#include <limits>

#include "reid/error.hpp"

namespace reid {

namespace {

struct Partition {
  std::vector<std::vector<std::size_t>> same;       // same-label partners, excluding self
  std::vector<std::vector<std::size_t>> different;  // other-label samples
  bool any_positive = false;
  bool any_negative = false;
};

Partition partition(const LabeledBatch& batch) {
  const std::size_t n = batch.size();
  Partition p;
  p.same.resize(n);
  p.different.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (batch.labels[i] == batch.labels[j]) {
        p.same[i].push_back(j);
      } else {
        p.different[i].push_back(j);
      }
    }
    p.any_positive = p.any_positive || !p.same[i].empty();
    p.any_negative = p.any_negative || !p.different[i].empty();
  }
  return p;
}

void require_minable(const Partition& p) {
  if (!p.any_positive) throw MiningError("no positive pairs available");
  if (!p.any_negative) throw MiningError("no negatives available: batch holds a single individual");
}

}  // namespace

void LabeledBatch::validate() const {
  if (embeddings.size() != labels.size()) {
    throw DimensionError("batch has " + std::to_string(embeddings.size()) + " embeddings but " +
                         std::to_string(labels.size()) + " labels");
  }
  if (labels.size() < 2) throw MiningError("batch needs at least two samples");
  for (const auto& e : embeddings) require_same_dim(embeddings.front().dim(), e.dim(), "batch");
}

std::vector<Pair> sample_pairs(const LabeledBatch& batch, RngStream& rng) {
  batch.validate();
  const Partition p = partition(batch);
  require_minable(p);

  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (p.same[i].empty() || p.different[i].empty()) continue;
    const std::size_t pos = p.same[i][rng.uniform_index(p.same[i].size())];
    const std::size_t neg = p.different[i][rng.uniform_index(p.different[i].size())];
    pairs.push_back({i, pos, true});
    pairs.push_back({i, neg, false});
  }
  return pairs;
}

std::vector<Triplet> mine_semi_hard_triplets(const LabeledBatch& batch, const LossConfig& cfg,
                                             RngStream& rng) {
  batch.validate();
  const Partition p = partition(batch);
  require_minable(p);

  const std::size_t n = batch.size();
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = triplet_distance(batch.embeddings[i], batch.embeddings[j], cfg);
      dist[i * n + j] = d;
      dist[j * n + i] = d;
    }
  }

  std::vector<Triplet> triplets;
  std::vector<std::size_t> band;
  for (std::size_t a = 0; a < n; ++a) {
    const auto& negatives = p.different[a];
    if (negatives.empty()) continue;
    for (std::size_t pos : p.same[a]) {
      const double d_ap = dist[a * n + pos];
      band.clear();
      for (std::size_t neg : negatives) {
        const double d_an = dist[a * n + neg];
        if (d_ap < d_an && d_an < d_ap + cfg.margin) band.push_back(neg);
      }
      if (!band.empty()) {
        triplets.push_back({a, pos, band[rng.uniform_index(band.size())], false});
        continue;
      }
      std::size_t beyond = n;
      std::size_t closest = n;
      double beyond_d = std::numeric_limits<double>::infinity();
      double closest_d = std::numeric_limits<double>::infinity();
      for (std::size_t neg : negatives) {
        const double d_an = dist[a * n + neg];
        if (d_an > d_ap && d_an < beyond_d) {
          beyond_d = d_an;
          beyond = neg;
        }
        if (d_an < closest_d) {
          closest_d = d_an;
          closest = neg;
        }
      }
      triplets.push_back({a, pos, beyond != n ? beyond : closest, true});
    }
  }
  if (triplets.empty()) throw MiningError("no (anchor, positive) pair has a negative");
  return triplets;
}

}  // namespace reid
