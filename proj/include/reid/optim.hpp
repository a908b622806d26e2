#pragma once

/** \file optim.hpp
 *  \brief Adam with per-epoch learning-rate decay.
 */

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "reid/model.hpp"

namespace reid {

/// How decay_per_epoch is applied.
enum class DecayMode {
  /// lr_e = lr * (1 - decay)^epoch
  learning_rate,
  /// Constant lr; decay is an L2 coefficient added to each gradient (g + decay * w).
  weight_decay,
};

struct OptimConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double decay_per_epoch = 0.02;
  DecayMode decay_mode = DecayMode::learning_rate;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  /// K in P x K batch sampling; P = batch_size / K.
  std::size_t images_per_individual = 4;
  /// Stop after this many epochs without validation improvement. 0 disables.
  std::size_t early_stopping_patience = 0;

  void validate() const;
  [[nodiscard]] double effective_lr(std::size_t epoch) const;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  static AdamState for_params(std::span<const ParamRef> params);
};

/**
 * One bias-corrected Adam update at the epoch's effective learning rate.
 * Increments state.step. Throws DimensionError on shape disagreement and
 * DataError naming the parameter when a gradient is not finite; parameters
 * are untouched when it throws.
 */
void adam_step(std::span<const ParamRef> params, std::span<const std::span<const double>> grads,
               AdamState& state, const OptimConfig& cfg, std::size_t epoch);

}  // namespace reid
