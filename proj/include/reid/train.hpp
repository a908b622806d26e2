#pragma once

/** \file train.hpp
 *  \brief Mini-batch metric-learning loop: P x K sampling, augmentation,
 *         forward, pair/triplet selection, loss, backprop, Adam.
 */

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "reid/augment.hpp"
#include "reid/dataset.hpp"
#include "reid/losses.hpp"
#include "reid/mining.hpp"
#include "reid/model.hpp"
#include "reid/optim.hpp"

namespace reid {

enum class LossKind { siamese, triplet };

[[nodiscard]] std::string_view to_string(LossKind kind);
/// Accepts "siamese" (or "contrastive") and "triplet".
[[nodiscard]] LossKind parse_loss_kind(std::string_view text);

/// Mean loss over a set of pairs or triplets and its gradient per embedding.
struct BatchLoss {
  double loss = 0.0;
  std::vector<Vector> embedding_grads;
};

[[nodiscard]] BatchLoss pair_objective(std::span<const Vector> embeddings,
                                       std::span<const Pair> pairs, const LossConfig& cfg);
[[nodiscard]] BatchLoss triplet_objective(std::span<const Vector> embeddings,
                                          std::span<const Triplet> triplets, const LossConfig& cfg);

/// Sums per-sample backward passes.
[[nodiscard]] ParamGrads backprop_batch(const EmbeddingNet& net, std::span<const ForwardTrace> traces,
                                        std::span<const Vector> embedding_grads);

/**
 * Draws up to P = batch_size / K individuals that have at least two images
 * (all individuals if fewer than two qualify), then up to K distinct images of
 * each.
 */
[[nodiscard]] std::vector<std::size_t> sample_pk_batch(
    const std::vector<std::vector<std::size_t>>& indices_by_label, std::size_t individuals,
    std::size_t images_per_individual, RngStream& rng);

struct TrainOptions {
  LossKind loss_kind = LossKind::triplet;
  LossConfig loss;
  OptimConfig optim;
  /// Only applied when the training set carries a raster shape.
  AugmentConfig augment;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  /// Absent when no validation set was given or it cannot form a batch.
  std::optional<double> val_loss;

  bool operator==(const EpochLog&) const = default;
};

struct TrainResult {
  EmbeddingNet net;
  std::vector<EpochLog> history;
  bool stopped_early = false;
};

/**
 * Trains `net` in place of a copy and returns it with the per-epoch loss log.
 * Each epoch runs ceil(|train| / batch_size) batches. Deterministic in the
 * rng's seed. MiningError propagates when batches cannot supply positives
 * and negatives (e.g. a single individual).
 *
 * With early stopping enabled and a validation loss available, the returned
 * net is the one with the lowest validation loss.
 */
[[nodiscard]] TrainResult train(EmbeddingNet net, const LabeledFeatures& train_set,
                                const LabeledFeatures* validation, const TrainOptions& options,
                                RngStream& rng);

/// CSV `epoch,mean_train_loss,mean_val_loss`; the last column is empty when absent.
void write_loss_log(std::ostream& out, std::span<const EpochLog> history);

}  // namespace reid
