#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>
#include <sstream>

#include "reid/dataset.hpp"
#include "reid/error.hpp"
#include "reid/synth.hpp"
#include "reid/train.hpp"
#include "../support/oracles.hpp"

using namespace reid;

namespace {

LabeledFeatures clusters(std::size_t individuals, std::size_t images, double spread, std::uint64_t seed) {
  RngStream rng(seed);
  return load_features(synth_dataset(individuals, images, 8, spread, 0.5, rng));
}

TrainOptions small_options(LossKind kind, std::size_t epochs) {
  TrainOptions o;
  o.loss_kind = kind;
  o.optim.epochs = epochs;
  o.optim.lr = 0.01;
  o.optim.batch_size = 16;
  return o;
}

EmbeddingNet small_net(std::size_t input, std::uint64_t seed) {
  RngStream rng(seed);
  return EmbeddingNet::init({input, 16, 8}, rng);
}

}  // namespace

TEST_CASE("P x K batches draw distinct images from distinct individuals") {
  std::vector<std::vector<std::size_t>> groups;
  std::size_t next = 0;
  for (std::size_t g = 0; g < 12; ++g) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < 2 + g % 5; ++i) members.push_back(next++);
    groups.push_back(members);
  }
  std::vector<std::size_t> owner(next);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t i : groups[g]) owner[i] = g;
  }
  RngStream rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto batch = sample_pk_batch(groups, 8, 4, rng);
    std::set<std::size_t> unique(batch.begin(), batch.end());
    CHECK(unique.size() == batch.size());
    std::map<std::size_t, std::size_t> per;
    for (std::size_t i : batch) ++per[owner[i]];
    CHECK(per.size() == 8);
    for (const auto& [g, n] : per) CHECK(n == std::min<std::size_t>(4, groups[g].size()));
  }
}

TEST_CASE("pair and triplet objectives average per-item losses") {
  std::vector<Vector> e{Vector{0.0}, Vector{0.5}, Vector{3.0}};
  const LossConfig cfg;
  const std::vector<Pair> pairs{{0, 1, true}, {0, 2, false}, {1, 2, false}};
  const BatchLoss pl = pair_objective(e, pairs, cfg);
  CHECK(pl.loss == doctest::Approx(0.25 / 3.0));
  CHECK(pl.embedding_grads[0][0] == doctest::Approx(2.0 * -0.5 / 3.0));

  const std::vector<Triplet> triplets{{0, 1, 2, false}};
  const BatchLoss tl = triplet_objective(e, triplets, cfg);
  CHECK(tl.loss == 0.0);
  const std::vector<Triplet> active{{0, 2, 1, false}};
  CHECK(triplet_objective(e, active, cfg).loss == doctest::Approx(9.0 - 0.25 + 1.0));
}

TEST_CASE("triplet training reduces the loss on two clusters") {
  const LabeledFeatures data = clusters(2, 20, 0.2, 3);
  RngStream rng(4);
  const TrainResult r = train(small_net(8, 5), data, nullptr, small_options(LossKind::triplet, 10), rng);
  REQUIRE(r.history.size() == 10);
  CHECK(r.history.back().train_loss < r.history.front().train_loss);
  for (std::size_t e = 0; e < r.history.size(); ++e) {
    CHECK(r.history[e].epoch == e);
    CHECK_FALSE(r.history[e].val_loss.has_value());
  }
}

TEST_CASE("siamese training reduces the loss on two clusters") {
  const LabeledFeatures data = clusters(2, 20, 0.2, 6);
  RngStream rng(7);
  const TrainResult r = train(small_net(8, 8), data, nullptr, small_options(LossKind::siamese, 10), rng);
  CHECK(r.history.back().train_loss < r.history.front().train_loss);
}

TEST_CASE("training is deterministic in the seed") {
  const LabeledFeatures data = clusters(4, 10, 0.1, 9);
  const LabeledFeatures val = clusters(3, 6, 0.1, 10);
  const TrainOptions options = small_options(LossKind::triplet, 5);
  RngStream r1(11);
  RngStream r2(11);
  const TrainResult a = train(small_net(8, 12), data, &val, options, r1);
  const TrainResult b = train(small_net(8, 12), data, &val, options, r2);
  CHECK(a.history == b.history);
  CHECK(a.net == b.net);
  CHECK(a.history.front().val_loss.has_value());

  RngStream r3(13);
  const TrainResult c = train(small_net(8, 12), data, &val, options, r3);
  CHECK_FALSE(c.history == a.history);
}

TEST_CASE("a single individual cannot be trained") {
  const LabeledFeatures one = clusters(1, 10, 0.1, 14);
  RngStream rng(15);
  CHECK_THROWS_AS((void)train(small_net(8, 16), one, nullptr, small_options(LossKind::triplet, 2), rng),
                  MiningError);
  CHECK_THROWS_AS((void)train(small_net(8, 16), one, nullptr, small_options(LossKind::siamese, 2), rng),
                  MiningError);
}

TEST_CASE("input dimension must match the net") {
  const LabeledFeatures data = clusters(2, 5, 0.1, 17);
  RngStream rng(18);
  RngStream init(19);
  const EmbeddingNet wrong = EmbeddingNet::init({5, 4}, init);
  CHECK_THROWS_AS((void)train(wrong, data, nullptr, small_options(LossKind::triplet, 1), rng), DimensionError);
}

TEST_CASE("early stopping returns the best validation net") {
  const LabeledFeatures data = clusters(4, 10, 0.3, 20);
  const LabeledFeatures val = clusters(3, 6, 0.3, 21);
  TrainOptions options = small_options(LossKind::triplet, 40);
  options.optim.lr = 0.2;
  options.optim.early_stopping_patience = 2;
  RngStream rng(22);
  const TrainResult r = train(small_net(8, 23), data, &val, options, rng);
  CHECK(r.stopped_early);
  std::size_t best_epoch = 0;
  for (const auto& e : r.history) {
    if (*e.val_loss < *r.history[best_epoch].val_loss) best_epoch = e.epoch;
  }
  CHECK(r.history.size() == best_epoch + 1 + options.optim.early_stopping_patience);

  // Replaying up to the best epoch without early stopping yields the same net.
  TrainOptions replay = options;
  replay.optim.early_stopping_patience = 0;
  replay.optim.epochs = best_epoch + 1;
  RngStream again(22);
  const TrainResult upto = train(small_net(8, 23), data, &val, replay, again);
  CHECK(upto.net == r.net);
}

TEST_CASE("loss log format") {
  std::vector<EpochLog> history{{0, 1.5, std::nullopt}, {1, 0.25, 0.75}};
  std::ostringstream out;
  write_loss_log(out, history);
  CHECK(out.str() == "epoch,mean_train_loss,mean_val_loss\n0,1.5,\n1,0.25,0.75\n");
}

TEST_CASE("loss kind names") {
  CHECK(parse_loss_kind("triplet") == LossKind::triplet);
  CHECK(parse_loss_kind("siamese") == LossKind::siamese);
  CHECK(to_string(LossKind::siamese) == "siamese");
  CHECK_THROWS_AS((void)parse_loss_kind("hinge"), ConfigError);
}
