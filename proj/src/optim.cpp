#include "reid/optim.hpp"

#include <cmath>
#include <string>

#include "reid/error.hpp"

namespace reid {

void OptimConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("optim.lr must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("optim.beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("optim.beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("optim.epsilon must be > 0");
  if (!(decay_per_epoch >= 0.0 && decay_per_epoch < 1.0)) {
    throw ConfigError("optim.decay must lie in [0, 1)");
  }
  if (epochs == 0) throw ConfigError("optim.epochs must be positive");
  if (batch_size < 2) throw ConfigError("optim.batch_size must be at least 2");
  if (images_per_individual < 2) {
    throw ConfigError("optim.images_per_individual must be at least 2");
  }
  if (images_per_individual > batch_size) {
    throw ConfigError("optim.images_per_individual exceeds optim.batch_size");
  }
}

double OptimConfig::effective_lr(std::size_t epoch) const {
  if (decay_mode == DecayMode::weight_decay) return lr;
  return lr * std::pow(1.0 - decay_per_epoch, static_cast<double>(epoch));
}

AdamState AdamState::for_params(std::span<const ParamRef> params) {
  AdamState state;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.values.size(), 0.0);
    state.second_moment.emplace_back(p.values.size(), 0.0);
  }
  return state;
}

void adam_step(std::span<const ParamRef> params, std::span<const std::span<const double>> grads,
               AdamState& state, const OptimConfig& cfg, std::size_t epoch) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw DimensionError("adam: " + std::to_string(params.size()) + " parameters, " +
                         std::to_string(grads.size()) + " gradients, " +
                         std::to_string(state.first_moment.size()) + " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].values.size() ||
        state.first_moment[i].size() != params[i].values.size() ||
        state.second_moment[i].size() != params[i].values.size()) {
      throw DimensionError("adam: shape mismatch for parameter '" + params[i].name + "'");
    }
    for (double g : grads[i]) {
      if (!std::isfinite(g)) throw DataError("non-finite gradient for parameter '" + params[i].name + "'");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double lr = cfg.effective_lr(epoch);
  const double l2 = cfg.decay_mode == DecayMode::weight_decay ? cfg.decay_per_epoch : 0.0;
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].values;
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double g = grads[i][k] + l2 * w[k];
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      w[k] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace reid
