#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "reid/error.hpp"
#include "reid/mining.hpp"
#include "../support/oracles.hpp"

using namespace reid;

namespace {

LabeledBatch line_batch(std::vector<double> xs, std::vector<Label> labels) {
  LabeledBatch b;
  for (double x : xs) b.embeddings.push_back(Vector{x});
  b.labels = std::move(labels);
  return b;
}

LabeledBatch random_batch(std::size_t individuals, std::size_t per, std::size_t dim, RngStream& rng) {
  LabeledBatch b;
  for (std::size_t i = 0; i < individuals; ++i) {
    for (std::size_t k = 0; k < per; ++k) {
      Vector v(dim);
      for (double& x : v.values()) x = rng.uniform(-1.0, 1.0);
      b.embeddings.push_back(v);
      b.labels.push_back(static_cast<Label>(i));
    }
  }
  return b;
}

}  // namespace

TEST_CASE("pair sampling on two individuals with two images each") {
  const LabeledBatch batch = line_batch({0.0, 0.1, 5.0, 5.1}, {0, 0, 1, 1});
  RngStream rng(1);
  const auto pairs = sample_pairs(batch, rng);
  CHECK(pairs.size() == 8);
  std::set<std::size_t> anchors;
  std::size_t same = 0;
  for (const auto& p : pairs) {
    anchors.insert(p.first);
    CHECK(p.first != p.second);
    CHECK(p.same == (batch.labels[p.first] == batch.labels[p.second]));
    if (p.same) ++same;
  }
  CHECK(anchors.size() == 4);
  CHECK(same == 4);
}

TEST_CASE("pair sampling errors and determinism") {
  RngStream rng(2);
  CHECK_THROWS_AS((void)sample_pairs(line_batch({0.0, 1.0, 2.0}, {4, 4, 4}), rng), MiningError);
  CHECK_THROWS_AS((void)sample_pairs(line_batch({0.0, 1.0, 2.0}, {1, 2, 3}), rng), MiningError);
  CHECK_THROWS_AS((void)sample_pairs(line_batch({0.0}, {1}), rng), MiningError);

  RngStream data(3);
  const LabeledBatch batch = random_batch(8, 4, 5, data);
  RngStream r1(10);
  RngStream r2(10);
  CHECK(sample_pairs(batch, r1) == sample_pairs(batch, r2));
}

TEST_CASE("semi-hard band on a line") {
  // anchor 0.0 and positive 0.2 (A); negatives 0.5 and 2.0 (B).
  const LabeledBatch batch = line_batch({0.0, 0.2, 0.5, 2.0}, {0, 0, 1, 1});
  const LossConfig cfg;
  RngStream rng(4);
  const auto triplets = mine_semi_hard_triplets(batch, cfg, rng);
  bool found = false;
  for (const auto& t : triplets) {
    if (t.anchor == 0 && t.positive == 1) {
      found = true;
      CHECK(t.negative == 2);
      CHECK_FALSE(t.fallback);
    }
  }
  CHECK(found);
}

TEST_CASE("far negatives fall back to the closest one") {
  const LabeledBatch batch = line_batch({0.0, 0.1, 10.0, 20.0}, {0, 0, 1, 1});
  const LossConfig cfg;
  RngStream rng(5);
  const auto triplets = mine_semi_hard_triplets(batch, cfg, rng);
  for (const auto& t : triplets) {
    if (t.anchor == 0 || t.anchor == 1) {
      CHECK(t.fallback);
      CHECK(t.negative == 2);
    }
  }
}

TEST_CASE("negative closer than the positive: easiest hard one beyond, else closest overall") {
  // anchor 0, positive 1.0; negatives at 0.3 (hard) and 3.0 (easy: 1 + 1 < 9).
  const LabeledBatch batch = line_batch({0.0, 1.0, 0.3, 3.0}, {0, 0, 1, 1});
  const LossConfig cfg;
  RngStream rng(6);
  for (const auto& t : mine_semi_hard_triplets(batch, cfg, rng)) {
    if (t.anchor == 0 && t.positive == 1) {
      CHECK(t.fallback);
      CHECK(t.negative == 3);
    }
  }
  // Only hard negatives: take the closest.
  const LabeledBatch hard = line_batch({0.0, 1.0, 0.3, -0.4}, {0, 0, 1, 1});
  for (const auto& t : mine_semi_hard_triplets(hard, cfg, rng)) {
    if (t.anchor == 0 && t.positive == 1) {
      CHECK(t.fallback);
      CHECK(t.negative == 2);
    }
  }
}

TEST_CASE("mined triplets match an exhaustive band check") {
  RngStream rng(7);
  LossConfig cfg;
  for (int trial = 0; trial < 30; ++trial) {
    cfg.margin = rng.uniform(0.2, 1.5);
    const LabeledBatch batch = random_batch(4, 4, 3, rng);
    RngStream mine(static_cast<std::uint64_t>(trial));
    const auto triplets = mine_semi_hard_triplets(batch, cfg, mine);
    std::size_t ordered_pairs = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t j = 0; j < batch.size(); ++j) {
        if (i != j && batch.labels[i] == batch.labels[j]) ++ordered_pairs;
      }
    }
    CHECK(triplets.size() == ordered_pairs);
    for (const auto& t : triplets) {
      CHECK(batch.labels[t.anchor] == batch.labels[t.positive]);
      CHECK(t.anchor != t.positive);
      CHECK(batch.labels[t.negative] != batch.labels[t.anchor]);
      const auto& a = batch.embeddings[t.anchor].storage();
      const double dap = oracle::sq_dist(a, batch.embeddings[t.positive].storage());
      const double dan = oracle::sq_dist(a, batch.embeddings[t.negative].storage());
      bool band_nonempty = false;
      for (std::size_t n = 0; n < batch.size(); ++n) {
        if (batch.labels[n] == batch.labels[t.anchor]) continue;
        const double d = oracle::sq_dist(a, batch.embeddings[n].storage());
        band_nonempty = band_nonempty || (dap < d && d < dap + cfg.margin);
      }
      CHECK(t.fallback == !band_nonempty);
      if (!t.fallback) {
        CHECK(dap < dan);
        CHECK(dan < dap + cfg.margin);
      }
    }
  }
}

TEST_CASE("separated classes give zero loss only through fallbacks") {
  // Classes more than a margin apart in squared distance: every band is empty.
  const LabeledBatch batch = line_batch({0.0, 0.1, 0.2, 5.0, 5.1, 5.2}, {0, 0, 0, 1, 1, 1});
  const LossConfig cfg;
  RngStream rng(8);
  for (const auto& t : mine_semi_hard_triplets(batch, cfg, rng)) {
    CHECK(t.fallback);
    CHECK(triplet_loss(batch.embeddings[t.anchor], batch.embeddings[t.positive],
                       batch.embeddings[t.negative], cfg) == 0.0);
  }
}

TEST_CASE("mining errors and determinism") {
  const LossConfig cfg;
  RngStream rng(9);
  CHECK_THROWS_AS((void)mine_semi_hard_triplets(line_batch({0.0, 1.0}, {0, 0}), cfg, rng), MiningError);
  CHECK_THROWS_AS((void)mine_semi_hard_triplets(line_batch({0.0, 1.0}, {0, 1}), cfg, rng), MiningError);
  LabeledBatch mismatched = line_batch({0.0, 1.0}, {0, 0});
  mismatched.labels.push_back(1);
  CHECK_THROWS_AS((void)mine_semi_hard_triplets(mismatched, cfg, rng), DimensionError);

  RngStream data(10);
  const LabeledBatch batch = random_batch(8, 4, 4, data);
  RngStream r1(99);
  RngStream r2(99);
  CHECK(mine_semi_hard_triplets(batch, cfg, r1) == mine_semi_hard_triplets(batch, cfg, r2));
}
