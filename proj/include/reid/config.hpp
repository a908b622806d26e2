#pragma once

/** \file config.hpp
 *  \brief Resolved run configuration and its flat text format.
 *
 * Format: `[section]` headers followed by `key = value` lines; `#` starts a
 * comment. A key is addressed as `section.key`. Writing a RunConfig and
 * reading it back yields an identical configuration.
 */

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reid/augment.hpp"
#include "reid/eval.hpp"
#include "reid/losses.hpp"
#include "reid/optim.hpp"
#include "reid/split.hpp"
#include "reid/synth.hpp"
#include "reid/train.hpp"

namespace reid {

struct ModelConfig {
  std::vector<std::size_t> hidden{64};
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  bool l2_normalize = false;

  /// Input dim followed by hidden dims and the embedding dim.
  [[nodiscard]] std::vector<std::size_t> layer_dims(std::size_t input_dim) const;
};

struct CensusConfig {
  /// Unset: calibrate on the validation split.
  std::optional<double> threshold;
  std::size_t max_exemplars = 5;
  /// Shuffle the sighting stream instead of using manifest order.
  bool shuffle = true;
};

struct BenchConfig {
  std::size_t seeds = 5;
  std::size_t train_individuals = 20;
  std::size_t test_individuals = 10;
  /// Cluster spread of the benchmark data; other shape parameters come from
  /// the synth section. Enough overlap that the loss choice matters.
  double spread = 0.15;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string dataset;
  std::string output = "out";
  /// Defaults to the manifest's species tag.
  std::string dataset_name;
  std::string model_tag = "mlp";
  std::string checkpoint;
  /// Unset: every fold.
  std::optional<std::size_t> fold;

  SplitConfig split;
  LossKind loss_kind = LossKind::triplet;
  LossConfig loss;
  OptimConfig optim;
  ModelConfig model;
  AugmentConfig augment;
  EvalConfig eval;
  CensusConfig census;
  SynthConfig synth;
  BenchConfig bench;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

using ConfigMap = std::map<std::string, std::string>;

/// Parses the text format into `section.key -> value`. Throws ConfigError with a line number.
[[nodiscard]] ConfigMap parse_config(std::istream& in, const std::string& source = "config");
[[nodiscard]] ConfigMap load_config_file(const std::string& path);

/// Applies values over `cfg`. Unknown keys and unparsable values throw ConfigError.
void apply_config(RunConfig& cfg, const ConfigMap& values);
/// Applies one `section.key=value` assignment.
void apply_assignment(RunConfig& cfg, const std::string& assignment);

[[nodiscard]] ConfigMap to_config_map(const RunConfig& cfg);
void write_config(std::ostream& out, const RunConfig& cfg);
[[nodiscard]] std::vector<std::string> config_keys();

}  // namespace reid
