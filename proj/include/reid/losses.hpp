#pragma once

/** \file losses.hpp
 *  \brief Contrastive (Siamese) and triplet objectives with analytic gradients
 *         with respect to the embeddings.
 *
 * Contrastive, with d = ||e1 - e2||:
 *   same pair       L = d^2
 *   different pair  L = max(0, margin - d)^2
 *
 * Triplet, with D(x, y) = ||x - y||^2 (or ||x - y|| when squared_distances is off):
 *   L = max(0, D(a, p) - D(a, n) + margin)
 *
 * Non-differentiable points take the zero subgradient: a different pair at
 * d == 0, and an unsquared triplet distance of exactly 0.
 */

#include "reid/numeric.hpp"

namespace reid {

struct LossConfig {
  double margin = 1.0;
  /// Triplet loss and the semi-hard band compare squared distances.
  bool squared_distances = true;

  /// Throws ConfigError("loss.margin ...") unless margin > 0 and finite.
  void validate() const;
};

[[nodiscard]] double contrastive_loss(const Vector& e1, const Vector& e2, bool same,
                                      const LossConfig& cfg);

struct PairGrad {
  Vector first;
  Vector second;
};

[[nodiscard]] PairGrad contrastive_grad(const Vector& e1, const Vector& e2, bool same,
                                        const LossConfig& cfg);

/// The distance the triplet objective compares, per cfg.squared_distances.
[[nodiscard]] double triplet_distance(const Vector& x, const Vector& y, const LossConfig& cfg);

[[nodiscard]] double triplet_loss(const Vector& anchor, const Vector& positive,
                                  const Vector& negative, const LossConfig& cfg);

struct TripletGrad {
  Vector anchor;
  Vector positive;
  Vector negative;
};

[[nodiscard]] TripletGrad triplet_grad(const Vector& anchor, const Vector& positive,
                                       const Vector& negative, const LossConfig& cfg);

}  // namespace reid
