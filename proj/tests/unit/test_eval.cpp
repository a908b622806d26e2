#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>

#include "reid/error.hpp"
#include "reid/eval.hpp"
#include "../support/oracles.hpp"

using namespace reid;

namespace {

EmbeddedSet random_set(std::size_t individuals, std::size_t per, std::size_t dim, std::uint64_t seed) {
  RngStream rng(seed);
  EmbeddedSet set;
  for (std::size_t i = 0; i < individuals; ++i) {
    set.label_names.push_back("id" + std::to_string(i));
    for (std::size_t k = 0; k < per; ++k) {
      Vector v(dim);
      for (double& x : v.values()) x = rng.normal();
      set.embeddings.push_back(v);
      set.labels.push_back(static_cast<Label>(i));
    }
  }
  return set;
}

std::vector<oracle::Vec> raw(const EmbeddedSet& set) {
  std::vector<oracle::Vec> out;
  for (const auto& e : set.embeddings) out.push_back(e.storage());
  return out;
}

}  // namespace

TEST_CASE("ap at k") {
  CHECK(ap_at_k(1, 1) == 1.0);
  CHECK(ap_at_k(3, 5) == doctest::Approx(1.0 / 3.0));
  CHECK(ap_at_k(6, 5) == 0.0);
  CHECK(ap_at_k(3, 5, RankMetric::hit_rate) == 1.0);
  CHECK_THROWS((void)ap_at_k(0, 5));
  for (std::size_t rank = 1; rank < 10; ++rank) {
    for (std::size_t k = 1; k < 10; ++k) {
      CHECK(ap_at_k(rank + 1, k) <= ap_at_k(rank, k));
      CHECK(ap_at_k(rank, k + 1) >= ap_at_k(rank, k));
    }
  }
}

TEST_CASE("episode structure") {
  const EmbeddedSet set = random_set(3, 3, 4, 1);
  RngStream rng(2);
  const EpisodeResult ep = sample_episode(set, rng);
  CHECK(ep.queries.size() == 3);
  CHECK(ep.excluded_queries.empty());
  for (const auto& q : ep.queries) {
    CHECK(q.ranked.size() == 3);
    CHECK(set.labels[q.positive_sample] == q.query);
    CHECK(q.positive_sample != q.query_sample);
    CHECK(std::set<Label>(q.ranked.begin(), q.ranked.end()).size() == 3);
    CHECK(q.ranked[q.positive_rank - 1] == q.query);
  }
  RngStream r1(3);
  RngStream r2(3);
  const EpisodeResult a = sample_episode(set, r1);
  const EpisodeResult b = sample_episode(set, r2);
  for (std::size_t i = 0; i < a.queries.size(); ++i) {
    CHECK(a.queries[i].positive_sample == b.queries[i].positive_sample);
    CHECK(a.queries[i].ranked == b.queries[i].ranked);
  }
}

TEST_CASE("a single-image individual is only a negative") {
  EmbeddedSet set = random_set(3, 3, 4, 4);
  set.label_names.push_back("single");
  set.embeddings.push_back(Vector{0.0, 0.0, 0.0, 0.0});
  set.labels.push_back(3);
  RngStream rng(5);
  const EpisodeResult ep = sample_episode(set, rng);
  CHECK(ep.queries.size() == 3);
  CHECK(ep.excluded_queries == std::vector<Label>{3});
  for (const auto& q : ep.queries) {
    CHECK(q.ranked.size() == 4);
    CHECK(std::find(q.ranked.begin(), q.ranked.end(), 3) != q.ranked.end());
  }
}

TEST_CASE("episode errors") {
  const EmbeddedSet one = random_set(1, 4, 2, 6);
  RngStream rng(7);
  CHECK_THROWS_AS((void)sample_episode(one, rng), DataError);
  const EmbeddedSet singles = random_set(4, 1, 2, 8);
  CHECK_THROWS_AS((void)sample_episode(singles, rng), DataError);
}

TEST_CASE("ties rank the positive behind the negatives") {
  EmbeddedSet set;
  set.label_names = {"a", "b"};
  set.embeddings = {Vector{0.0}, Vector{1.0}, Vector{1.0}, Vector{1.0}};
  set.labels = {0, 0, 1, 1};
  EvalConfig cfg;
  cfg.repetitions = 50;
  const MapResult r = map_at_k(set, cfg);
  // Query "a" from image 0 ties its positive with the negative at distance 1;
  // from image 1 the positive (image 0) is at 1, the negative at 0.
  CHECK(r.at(1).mean < 1.0);
}

TEST_CASE("perfectly separated embeddings score one") {
  EmbeddedSet set;
  for (std::size_t i = 0; i < 5; ++i) {
    set.label_names.push_back("id" + std::to_string(i));
    for (int k = 0; k < 3; ++k) {
      Vector v(5);
      v[i] = 1.0;
      set.embeddings.push_back(v);
      set.labels.push_back(static_cast<Label>(i));
    }
  }
  EvalConfig cfg;
  cfg.repetitions = 100;
  const MapResult r = map_at_k(set, cfg);
  CHECK(r.at(1).mean == 1.0);
  CHECK(r.at(5).mean == 1.0);
  CHECK(r.at(1).std == 0.0);
}

TEST_CASE("sampled mAP agrees with exhaustive enumeration") {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const EmbeddedSet set = random_set(3, 3, 2, seed);
    EvalConfig cfg;
    cfg.repetitions = 1000;
    cfg.seed = seed;
    const MapResult r = map_at_k(set, cfg);
    for (std::size_t k : {1u, 5u}) {
      const double exact = oracle::exhaustive_map(raw(set), set.labels, k);
      const double se = r.at(k).standard_error();
      CHECK(std::abs(r.at(k).mean - exact) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("exhaustive oracle on uneven groups") {
  EmbeddedSet set = random_set(4, 2, 3, 20);
  set.embeddings.push_back(Vector{0.1, 0.2, 0.3});
  set.labels.push_back(0);
  EvalConfig cfg;
  cfg.repetitions = 4000;
  cfg.seed = 21;
  const MapResult r = map_at_k(set, cfg);
  const double exact = oracle::exhaustive_map(raw(set), set.labels, 1);
  CHECK(std::abs(r.at(1).mean - exact) <= 3.0 * r.at(1).standard_error());
}

TEST_CASE("random embeddings sit at chance") {
  // Over independently drawn embedding sets every individual is equally likely
  // to rank first, so the expected mAP@1 is exactly 1/N.
  for (std::size_t n : {5u, 10u, 20u}) {
    std::vector<double> means;
    for (std::uint64_t d = 0; d < 40; ++d) {
      const EmbeddedSet set = random_set(n, 4, 8, 1000 * n + d);
      EvalConfig cfg;
      cfg.repetitions = 100;
      cfg.seed = d;
      means.push_back(map_at_k(set, cfg).at(1).mean);
    }
    double m = 0.0;
    for (double x : means) m += x;
    m /= static_cast<double>(means.size());
    double v = 0.0;
    for (double x : means) v += (x - m) * (x - m);
    const double se = std::sqrt(v / static_cast<double>(means.size() - 1) / static_cast<double>(means.size()));
    CHECK(std::abs(m - 1.0 / static_cast<double>(n)) <= 3.0 * se);
  }
}

TEST_CASE("sampled chance-level mAP matches the oracle on a small set") {
  const EmbeddedSet set = random_set(5, 3, 8, 35);
  EvalConfig cfg;
  cfg.seed = 45;
  const MapResult r = map_at_k(set, cfg);
  const double exact = oracle::exhaustive_map(raw(set), set.labels, 1);
  CHECK(std::abs(r.at(1).mean - exact) <= 3.0 * r.at(1).standard_error());
}

TEST_CASE("mAP@5 never falls below mAP@1 and the estimate is deterministic") {
  for (std::uint64_t seed = 50; seed < 60; ++seed) {
    const EmbeddedSet set = random_set(6, 3, 4, seed);
    EvalConfig cfg;
    cfg.repetitions = 200;
    cfg.seed = seed;
    const MapResult a = map_at_k(set, cfg);
    CHECK(a.at(5).mean >= a.at(1).mean);
    const MapResult b = map_at_k(set, cfg);
    CHECK(a.at(1).mean == b.at(1).mean);
    CHECK(a.at(5).std == b.at(5).std);
  }
}

TEST_CASE("doubling repetitions halves the estimator variance") {
  const EmbeddedSet set = random_set(6, 3, 4, 70);
  double var_small = 0.0;
  double var_large = 0.0;
  std::vector<double> small_means;
  std::vector<double> large_means;
  for (std::uint64_t s = 0; s < 60; ++s) {
    EvalConfig cfg;
    cfg.seed = 1000 + s;
    cfg.repetitions = 100;
    small_means.push_back(map_at_k(set, cfg).at(1).mean);
    cfg.repetitions = 200;
    large_means.push_back(map_at_k(set, cfg).at(1).mean);
  }
  auto variance = [](const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    return v / static_cast<double>(xs.size() - 1);
  };
  var_small = variance(small_means);
  var_large = variance(large_means);
  const double ratio = var_small / var_large;
  // Ratio of two variance estimates with 59 degrees of freedom each.
  CHECK(ratio > 1.1);
  CHECK(ratio < 3.6);
}

TEST_CASE("verification and threshold calibration") {
  CHECK(verify(Vector{1.0, 2.0}, Vector{1.0, 2.0}, 0.0));
  CHECK_FALSE(verify(Vector{0.0, 0.0}, Vector{3.0, 4.0}, 1.0));

  const std::vector<ScoredPair> pairs{{0.1, true}, {0.2, true}, {0.3, true}, {0.9, false}, {1.1, false}};
  const ThresholdCalibration c = calibrate_threshold(pairs);
  CHECK(c.accuracy == 1.0);
  CHECK(c.threshold == doctest::Approx(0.6));
  CHECK(verification_accuracy(pairs, c.threshold) == 1.0);
  CHECK(verification_accuracy(pairs, 0.0) == doctest::Approx(0.4));

  const std::vector<ScoredPair> mixed{{0.1, true}, {0.5, false}, {0.6, true}, {1.0, false}};
  const ThresholdCalibration m = calibrate_threshold(mixed);
  CHECK(m.accuracy == doctest::Approx(0.75));
  CHECK(verification_accuracy(mixed, m.threshold) == doctest::Approx(m.accuracy));
}

TEST_CASE("results CSV and fold aggregation") {
  std::vector<ResultRow> rows{{"ds", "triplet", "mlp", 0.5, 0.1, 0.7, 0.1, "0"},
                              {"ds", "triplet", "mlp", 0.7, 0.3, 0.9, 0.1, "1"}};
  rows.push_back(aggregate_folds(rows));
  CHECK(rows.back().fold == "mean");
  CHECK(rows.back().map1_mean == doctest::Approx(0.6));
  std::ostringstream out;
  write_results_csv(out, rows);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "dataset,loss_kind,model_tag,map1_mean,map1_std,map5_mean,map5_std,fold");
  std::string first;
  std::getline(in, first);
  CHECK(first == "ds,triplet,mlp,0.5,0.1,0.7,0.1,0");
}
