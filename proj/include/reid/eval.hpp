#pragma once

/** \file eval.hpp
 *  \brief Monte-Carlo closed-set ranking evaluation (mAP@k) and pairwise
 *         verification.
 *
 * One episode picks a random image of every test individual. Each individual
 * with at least two images is a query: its picked image is compared with one
 * other image of itself (the positive) and with the picked image of every
 * other individual (the negatives). Candidates are ranked by ascending
 * Euclidean distance; a negative tied with the positive ranks ahead of it.
 * With a single relevant candidate, AP@k is 1/rank when rank <= k, else 0.
 */

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "reid/dataset.hpp"
#include "reid/manifest.hpp"
#include "reid/model.hpp"
#include "reid/numeric.hpp"

namespace reid {

struct EmbeddedSet {
  std::vector<Vector> embeddings;
  std::vector<Label> labels;
  std::vector<std::string> label_names;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  [[nodiscard]] std::vector<std::vector<std::size_t>> indices_by_label() const;
};

[[nodiscard]] EmbeddedSet embed_all(const EmbeddingNet& net, const LabeledFeatures& data);
/// Uses the features themselves as embeddings.
[[nodiscard]] EmbeddedSet identity_embedding(const LabeledFeatures& data);

enum class RankMetric {
  /// 1/rank inside the top k
  average_precision,
  /// 1 inside the top k
  hit_rate,
};

struct EvalConfig {
  std::size_t repetitions = 1000;
  std::vector<std::size_t> k_values{1, 5};
  std::uint64_t seed = 0;
  RankMetric metric = RankMetric::average_precision;

  void validate() const;
};

struct QueryResult {
  Label query = 0;
  std::size_t query_sample = 0;
  std::size_t positive_sample = 0;
  /// Candidate individuals, nearest first. The query's own label marks the positive.
  std::vector<Label> ranked;
  std::size_t positive_rank = 0;
};

struct EpisodeResult {
  std::vector<QueryResult> queries;
  /// Individuals with a single image: negatives only, never queries.
  std::vector<Label> excluded_queries;
};

/// Throws DataError with fewer than two individuals or no eligible query.
[[nodiscard]] EpisodeResult sample_episode(const EmbeddedSet& set, RngStream& rng);
[[nodiscard]] EpisodeResult sample_episode(const Manifest& test, const EmbeddingNet& net,
                                           RngStream& rng);

/// rank must be >= 1 (std::invalid_argument otherwise).
[[nodiscard]] double ap_at_k(std::size_t rank, std::size_t k,
                             RankMetric metric = RankMetric::average_precision);

/// Mean over queries of AP@k for one episode.
[[nodiscard]] double episode_score(const EpisodeResult& episode, std::size_t k,
                                   RankMetric metric = RankMetric::average_precision);

struct MetricSummary {
  std::size_t k = 0;
  double mean = 0.0;
  /// Sample std of the per-repetition scores.
  double std = 0.0;
  std::size_t repetitions = 0;

  /// Monte-Carlo standard error of the mean.
  [[nodiscard]] double standard_error() const;
};

struct MapResult {
  std::vector<MetricSummary> per_k;
  std::size_t eligible_queries = 0;
  std::size_t excluded_queries = 0;

  /// Throws std::out_of_range when k was not evaluated.
  [[nodiscard]] const MetricSummary& at(std::size_t k) const;
};

/// Repetition r uses RngStream(cfg.seed).derive(r).
[[nodiscard]] MapResult map_at_k(const EmbeddedSet& set, const EvalConfig& cfg);
[[nodiscard]] MapResult map_at_k(const Manifest& test, const EmbeddingNet& net, const EvalConfig& cfg);

/// Same individual iff the embeddings lie within `threshold`.
[[nodiscard]] bool verify(const Vector& e1, const Vector& e2, double threshold);

struct ScoredPair {
  double distance = 0.0;
  bool same = false;
};

/// Every unordered pair when there are at most max_pairs, else max_pairs random pairs.
[[nodiscard]] std::vector<ScoredPair> verification_pairs(const EmbeddedSet& set, std::size_t max_pairs,
                                                         RngStream& rng);

struct ThresholdCalibration {
  double threshold = 0.0;
  double accuracy = 0.0;
};

/**
 * Sweeps every cut between consecutive distinct distances and returns the
 * midpoint of the gap at the most accurate cut; among equally accurate cuts
 * the widest gap wins. Throws DataError on an empty input.
 */
[[nodiscard]] ThresholdCalibration calibrate_threshold(std::span<const ScoredPair> pairs);
[[nodiscard]] double verification_accuracy(std::span<const ScoredPair> pairs, double threshold);

struct ResultRow {
  std::string dataset;
  std::string loss_kind;
  std::string model_tag;
  double map1_mean = 0.0;
  double map1_std = 0.0;
  double map5_mean = 0.0;
  double map5_std = 0.0;
  /// Fold index, or "mean" for the aggregate over folds.
  std::string fold;
};

/// Aggregate row: mean over folds of each column.
[[nodiscard]] ResultRow aggregate_folds(std::span<const ResultRow> rows);

/// CSV `dataset,loss_kind,model_tag,map1_mean,map1_std,map5_mean,map5_std,fold`.
void write_results_csv(std::ostream& out, std::span<const ResultRow> rows);

}  // namespace reid
