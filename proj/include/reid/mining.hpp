#pragma once

/** \file mining.hpp
 *  \brief Training-pair and semi-hard triplet selection within a mini-batch.
 */

#include <cstddef>
#include <vector>

#include "reid/losses.hpp"
#include "reid/numeric.hpp"

namespace reid {

/// Dense integer identity assigned to each individual of a dataset.
using Label = int;

struct LabeledBatch {
  std::vector<Vector> embeddings;
  std::vector<Label> labels;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  /// Equal lengths, at least two samples, one shared embedding dimension.
  void validate() const;
};

struct Pair {
  std::size_t first = 0;
  std::size_t second = 0;
  bool same = false;

  bool operator==(const Pair&) const = default;
};

struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  /// True when the semi-hard band was empty and the fallback rule chose the negative.
  bool fallback = false;

  bool operator==(const Triplet&) const = default;
};

/**
 * Balanced Siamese pairs: every sample that has a same-label partner contributes
 * one positive pair (with a random partner) and one negative pair (with a random
 * sample of another label).
 *
 * Throws MiningError when no label repeats or when every label is identical.
 */
[[nodiscard]] std::vector<Pair> sample_pairs(const LabeledBatch& batch, RngStream& rng);

/**
 * One negative per ordered (anchor, positive) pair, drawn uniformly from the
 * semi-hard band D(a,p) < D(a,n) < D(a,p) + margin, where D follows
 * cfg.squared_distances.
 *
 * If the band is empty the negative is the closest one beyond D(a,p), or
 * failing that the closest negative overall, and the triplet is flagged as a
 * fallback.
 *
 * Throws MiningError when the batch has no (anchor, positive) pair or no negative.
 */
[[nodiscard]] std::vector<Triplet> mine_semi_hard_triplets(const LabeledBatch& batch,
                                                          const LossConfig& cfg,
                                                          RngStream& rng);

}  // namespace reid
