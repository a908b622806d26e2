#pragma once

/** \file pipeline.hpp
 *  \brief End-to-end workflows composed from the modules: per-fold training
 *         and evaluation, census runs, and the synthetic Siamese-vs-triplet
 *         benchmark. All randomness descends from RunConfig::seed.
 */

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reid/census.hpp"
#include "reid/config.hpp"
#include "reid/eval.hpp"
#include "reid/model.hpp"
#include "reid/split.hpp"
#include "reid/train.hpp"

namespace reid {

/// Child-stream indices under the global seed, one per purpose.
enum class Purpose : std::uint64_t {
  synth = 1,
  split = 2,
  init = 3,
  train = 4,
  eval = 5,
  census = 6,
  bench = 7,
};

[[nodiscard]] RngStream purpose_stream(std::uint64_t seed, Purpose purpose);
/// Split config with its seed derived from the global seed.
[[nodiscard]] SplitConfig resolved_split(const RunConfig& cfg);
[[nodiscard]] TrainOptions train_options(const RunConfig& cfg);
[[nodiscard]] EmbeddingNet initial_net(const RunConfig& cfg, std::size_t input_dim, std::size_t fold);

/// Initialises and trains a net on one fold's train split, logging validation loss.
[[nodiscard]] TrainResult train_fold(const RunConfig& cfg, const ManifestSplit& split, std::size_t fold);

[[nodiscard]] MapResult evaluate_fold(const RunConfig& cfg, const EmbeddingNet& net,
                                      const Manifest& test, std::size_t fold);
[[nodiscard]] ResultRow result_row(const RunConfig& cfg, const Manifest& manifest,
                                   const MapResult& result, std::string fold);

/// Threshold from a max-accuracy sweep over pairs of the given set.
[[nodiscard]] ThresholdCalibration calibrate_on(const EmbeddingNet* net, const LabeledFeatures& data,
                                                RngStream& rng);

/// Sightings from a manifest, truth attached, optionally shuffled.
[[nodiscard]] std::vector<Sighting> sightings_from(const Manifest& manifest, bool shuffle, RngStream& rng);

struct BenchRow {
  std::size_t seed_index = 0;
  LossKind kind = LossKind::triplet;
  double map1 = 0.0;
  double map5 = 0.0;
  double final_train_loss = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  [[nodiscard]] double mean_map1(LossKind kind) const;
  [[nodiscard]] double mean_map5(LossKind kind) const;
};

/**
 * For each seed: a synthetic dataset of bench.train_individuals +
 * bench.test_individuals individuals (spread bench.spread, other shape from
 * cfg.synth), split into
 * disjoint train and test individuals; one shared initial net trained once
 * per loss kind, then scored by mAP@1/mAP@5 on the test individuals.
 */
[[nodiscard]] BenchReport run_benchmark(const RunConfig& cfg);

/// CSV `seed,loss_kind,map1,map5,final_train_loss` followed by per-kind mean rows.
void write_bench_csv(std::ostream& out, const BenchReport& report);
/// Human-readable comparison table.
void print_bench_table(std::ostream& out, const BenchReport& report);

}  // namespace reid
