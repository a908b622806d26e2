#include "reid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "reid/error.hpp"

namespace reid {

namespace {

struct Candidate {
  double distance;
  bool positive;
  Label label;
};

double mean_of(std::span<const double> xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace

std::vector<std::vector<std::size_t>> EmbeddedSet::indices_by_label() const {
  std::vector<std::vector<std::size_t>> groups(label_names.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    groups.at(static_cast<std::size_t>(labels[i])).push_back(i);
  }
  return groups;
}

EmbeddedSet embed_all(const EmbeddingNet& net, const LabeledFeatures& data) {
  EmbeddedSet set{{}, data.labels, data.label_names};
  set.embeddings.reserve(data.size());
  for (const auto& x : data.features) set.embeddings.push_back(net.embed(x));
  return set;
}

EmbeddedSet identity_embedding(const LabeledFeatures& data) {
  return EmbeddedSet{data.features, data.labels, data.label_names};
}

void EvalConfig::validate() const {
  if (repetitions == 0) throw ConfigError("eval.repetitions must be at least 1");
  if (k_values.empty()) throw ConfigError("eval.k needs at least one value");
  for (std::size_t k : k_values) {
    if (k == 0) throw ConfigError("eval.k values must be at least 1");
  }
}

EpisodeResult sample_episode(const EmbeddedSet& set, RngStream& rng) {
  const auto groups = set.indices_by_label();
  std::vector<Label> present;
  for (std::size_t label = 0; label < groups.size(); ++label) {
    if (!groups[label].empty()) present.push_back(static_cast<Label>(label));
  }
  if (present.size() < 2) {
    throw DataError("evaluation needs at least two individuals, got " + std::to_string(present.size()));
  }

  std::vector<std::size_t> picked(groups.size(), 0);
  for (Label label : present) {
    const auto& g = groups[static_cast<std::size_t>(label)];
    picked[static_cast<std::size_t>(label)] = g[rng.uniform_index(g.size())];
  }

  EpisodeResult episode;
  std::vector<Candidate> candidates;
  for (Label label : present) {
    const auto& g = groups[static_cast<std::size_t>(label)];
    if (g.size() < 2) {
      episode.excluded_queries.push_back(label);
      continue;
    }
    const std::size_t query = picked[static_cast<std::size_t>(label)];
    // Uniform over the group's other images.
    std::size_t slot = rng.uniform_index(g.size() - 1);
    if (g[slot] == query) slot = g.size() - 1;
    const std::size_t positive = g[slot];

    const Vector& q = set.embeddings[query];
    candidates.clear();
    candidates.push_back({euclidean_distance(q, set.embeddings[positive]), true, label});
    for (Label other : present) {
      if (other == label) continue;
      candidates.push_back(
          {euclidean_distance(q, set.embeddings[picked[static_cast<std::size_t>(other)]]), false, other});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.distance != b.distance) return a.distance < b.distance;
      if (a.positive != b.positive) return !a.positive;
      return a.label < b.label;
    });

    QueryResult result{label, query, positive, {}, 0};
    for (std::size_t r = 0; r < candidates.size(); ++r) {
      result.ranked.push_back(candidates[r].label);
      if (candidates[r].positive) result.positive_rank = r + 1;
    }
    episode.queries.push_back(std::move(result));
  }
  if (episode.queries.empty()) throw DataError("no test individual has two images to form a query");
  return episode;
}

EpisodeResult sample_episode(const Manifest& test, const EmbeddingNet& net, RngStream& rng) {
  return sample_episode(embed_all(net, load_features(test)), rng);
}

double ap_at_k(std::size_t rank, std::size_t k, RankMetric metric) {
  if (rank == 0) throw std::invalid_argument("ap_at_k: rank must be >= 1");
  if (rank > k) return 0.0;
  return metric == RankMetric::hit_rate ? 1.0 : 1.0 / static_cast<double>(rank);
}

double episode_score(const EpisodeResult& episode, std::size_t k, RankMetric metric) {
  if (episode.queries.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& q : episode.queries) acc += ap_at_k(q.positive_rank, k, metric);
  return acc / static_cast<double>(episode.queries.size());
}

double MetricSummary::standard_error() const {
  return repetitions == 0 ? 0.0 : std / std::sqrt(static_cast<double>(repetitions));
}

const MetricSummary& MapResult::at(std::size_t k) const {
  for (const auto& s : per_k) {
    if (s.k == k) return s;
  }
  throw std::out_of_range("k=" + std::to_string(k) + " was not evaluated");
}

MapResult map_at_k(const EmbeddedSet& set, const EvalConfig& cfg) {
  cfg.validate();
  const RngStream root(cfg.seed);
  std::vector<std::vector<double>> scores(cfg.k_values.size());
  MapResult result;
  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    RngStream rng = root.derive(r);
    const EpisodeResult episode = sample_episode(set, rng);
    if (r == 0) {
      result.eligible_queries = episode.queries.size();
      result.excluded_queries = episode.excluded_queries.size();
    }
    for (std::size_t i = 0; i < cfg.k_values.size(); ++i) {
      scores[i].push_back(episode_score(episode, cfg.k_values[i], cfg.metric));
    }
  }
  for (std::size_t i = 0; i < cfg.k_values.size(); ++i) {
    result.per_k.push_back({cfg.k_values[i], mean_of(scores[i]), sample_std(scores[i]), cfg.repetitions});
  }
  return result;
}

MapResult map_at_k(const Manifest& test, const EmbeddingNet& net, const EvalConfig& cfg) {
  return map_at_k(embed_all(net, load_features(test)), cfg);
}

bool verify(const Vector& e1, const Vector& e2, double threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("verify: threshold must be >= 0");
  return euclidean_distance(e1, e2) <= threshold;
}

std::vector<ScoredPair> verification_pairs(const EmbeddedSet& set, std::size_t max_pairs,
                                           RngStream& rng) {
  const std::size_t n = set.size();
  std::vector<ScoredPair> pairs;
  if (n < 2) return pairs;
  const std::size_t all = n * (n - 1) / 2;
  auto score = [&](std::size_t i, std::size_t j) {
    return ScoredPair{euclidean_distance(set.embeddings[i], set.embeddings[j]),
                      set.labels[i] == set.labels[j]};
  };
  if (all <= max_pairs) {
    pairs.reserve(all);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) pairs.push_back(score(i, j));
    }
    return pairs;
  }
  pairs.reserve(max_pairs);
  while (pairs.size() < max_pairs) {
    const std::size_t i = rng.uniform_index(n);
    std::size_t j = rng.uniform_index(n - 1);
    if (j >= i) ++j;
    pairs.push_back(score(i, j));
  }
  return pairs;
}

double verification_accuracy(std::span<const ScoredPair> pairs, double threshold) {
  if (pairs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    if ((p.distance <= threshold) == p.same) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

ThresholdCalibration calibrate_threshold(std::span<const ScoredPair> pairs) {
  if (pairs.empty()) throw DataError("threshold calibration needs at least one pair");
  std::vector<ScoredPair> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.distance < b.distance; });
  const std::size_t n = sorted.size();
  const std::size_t total_same = static_cast<std::size_t>(
      std::count_if(sorted.begin(), sorted.end(), [](const ScoredPair& p) { return p.same; }));

  // Cut c accepts sorted[0, c) as "same"; cuts fall only between distinct distances.
  std::size_t same_below = 0;
  std::size_t best_correct = 0;
  double best_gap = -1.0;
  double best_threshold = 0.0;
  for (std::size_t c = 0; c <= n; ++c) {
    if (c > 0) same_below += sorted[c - 1].same ? 1 : 0;
    if (c > 0 && c < n && sorted[c].distance == sorted[c - 1].distance) continue;
    const std::size_t correct = same_below + (n - c) - (total_same - same_below);
    const double lo = c == 0 ? 0.0 : sorted[c - 1].distance;
    const double hi = c == n ? lo + std::max(1.0, lo) : sorted[c].distance;
    const double gap = hi - lo;
    if (correct > best_correct || (correct == best_correct && gap > best_gap)) {
      best_correct = correct;
      best_gap = gap;
      best_threshold = c == 0 ? sorted[0].distance / 2.0 : lo + gap / 2.0;
    }
  }
  return {best_threshold, static_cast<double>(best_correct) / static_cast<double>(n)};
}

ResultRow aggregate_folds(std::span<const ResultRow> rows) {
  if (rows.empty()) throw DataError("no fold results to aggregate");
  ResultRow out = rows.front();
  out.fold = "mean";
  out.map1_mean = out.map1_std = out.map5_mean = out.map5_std = 0.0;
  for (const auto& r : rows) {
    out.map1_mean += r.map1_mean;
    out.map1_std += r.map1_std;
    out.map5_mean += r.map5_mean;
    out.map5_std += r.map5_std;
  }
  const double n = static_cast<double>(rows.size());
  out.map1_mean /= n;
  out.map1_std /= n;
  out.map5_mean /= n;
  out.map5_std /= n;
  return out;
}

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << "dataset,loss_kind,model_tag,map1_mean,map1_std,map5_mean,map5_std,fold\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.loss_kind << ',' << r.model_tag << ',' << format_real(r.map1_mean)
        << ',' << format_real(r.map1_std) << ',' << format_real(r.map5_mean) << ','
        << format_real(r.map5_std) << ',' << r.fold << '\n';
  }
}

}  // namespace reid
