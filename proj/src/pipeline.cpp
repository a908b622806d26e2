#include "reid/pipeline.hpp"

#include <cstdio>
#include <ostream>
#include <set>

#include "reid/error.hpp"
#include "reid/manifest.hpp"
#include "reid/synth.hpp"

namespace reid {

namespace {

constexpr std::size_t kCalibrationPairs = 20000;

double mean_where(const std::vector<BenchRow>& rows, LossKind kind, double BenchRow::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.kind != kind) continue;
    sum += r.*field;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace

RngStream purpose_stream(std::uint64_t seed, Purpose purpose) {
  return RngStream(seed).derive(static_cast<std::uint64_t>(purpose));
}

SplitConfig resolved_split(const RunConfig& cfg) {
  SplitConfig split = cfg.split;
  split.seed = purpose_stream(cfg.seed, Purpose::split).seed();
  return split;
}

TrainOptions train_options(const RunConfig& cfg) {
  return TrainOptions{cfg.loss_kind, cfg.loss, cfg.optim, cfg.augment};
}

EmbeddingNet initial_net(const RunConfig& cfg, std::size_t input_dim, std::size_t fold) {
  RngStream rng = purpose_stream(cfg.seed, Purpose::init).derive(fold);
  return EmbeddingNet::init(cfg.model.layer_dims(input_dim), rng, cfg.model.l2_normalize);
}

TrainResult train_fold(const RunConfig& cfg, const ManifestSplit& split, std::size_t fold) {
  const LabeledFeatures train_set = load_features(split.train);
  const LabeledFeatures val_set = load_features(split.val);
  EmbeddingNet net = initial_net(cfg, train_set.feature_dim(), fold);
  RngStream rng = purpose_stream(cfg.seed, Purpose::train).derive(fold);
  return train(std::move(net), train_set, val_set.size() > 0 ? &val_set : nullptr, train_options(cfg), rng);
}

MapResult evaluate_fold(const RunConfig& cfg, const EmbeddingNet& net, const Manifest& test,
                        std::size_t fold) {
  EvalConfig eval = cfg.eval;
  eval.seed = purpose_stream(cfg.seed, Purpose::eval).derive(fold).seed();
  return map_at_k(test, net, eval);
}

ResultRow result_row(const RunConfig& cfg, const Manifest& manifest, const MapResult& result,
                     std::string fold) {
  ResultRow row;
  row.dataset = cfg.dataset_name.empty() ? manifest.species_tag : cfg.dataset_name;
  row.loss_kind = std::string(to_string(cfg.loss_kind));
  row.model_tag = cfg.model_tag;
  row.map1_mean = result.at(1).mean;
  row.map1_std = result.at(1).std;
  row.map5_mean = result.at(5).mean;
  row.map5_std = result.at(5).std;
  row.fold = std::move(fold);
  return row;
}

ThresholdCalibration calibrate_on(const EmbeddingNet* net, const LabeledFeatures& data, RngStream& rng) {
  const EmbeddedSet set = net != nullptr ? embed_all(*net, data) : identity_embedding(data);
  const auto pairs = verification_pairs(set, kCalibrationPairs, rng);
  return calibrate_threshold(pairs);
}

std::vector<Sighting> sightings_from(const Manifest& manifest, bool shuffle, RngStream& rng) {
  const LabeledFeatures data = load_features(manifest);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (shuffle) rng.shuffle(order);
  std::vector<Sighting> stream;
  stream.reserve(order.size());
  for (std::size_t i : order) {
    stream.push_back({data.features[i], data.label_names[static_cast<std::size_t>(data.labels[i])]});
  }
  return stream;
}

double BenchReport::mean_map1(LossKind kind) const { return mean_where(rows, kind, &BenchRow::map1); }
double BenchReport::mean_map5(LossKind kind) const { return mean_where(rows, kind, &BenchRow::map5); }

BenchReport run_benchmark(const RunConfig& cfg) {
  cfg.validate();
  const RngStream root = purpose_stream(cfg.seed, Purpose::bench);
  BenchReport report;
  for (std::size_t s = 0; s < cfg.bench.seeds; ++s) {
    const RngStream seed_rng = root.derive(s);
    SynthConfig synth = cfg.synth;
    synth.num_individuals = cfg.bench.train_individuals + cfg.bench.test_individuals;
    synth.cluster_spread = cfg.bench.spread;
    RngStream data_rng = seed_rng.derive(0);
    const Manifest all = synth_dataset(synth, data_rng);

    std::set<std::string> train_ids;
    for (const auto& [id, n] : all.counts_by_individual()) {
      if (train_ids.size() < cfg.bench.train_individuals) train_ids.insert(id);
    }
    Manifest train_part;
    Manifest test_part;
    for (const auto& e : all.entries) {
      (train_ids.count(e.individual_id) ? train_part : test_part).entries.push_back(e);
    }
    const LabeledFeatures train_set = load_features(train_part);
    const LabeledFeatures test_set = load_features(test_part);

    RngStream init_rng = seed_rng.derive(1);
    const EmbeddingNet start =
        EmbeddingNet::init(cfg.model.layer_dims(train_set.feature_dim()), init_rng, cfg.model.l2_normalize);
    EvalConfig eval = cfg.eval;
    eval.seed = seed_rng.derive(3).seed();

    for (LossKind kind : {LossKind::siamese, LossKind::triplet}) {
      TrainOptions options = train_options(cfg);
      options.loss_kind = kind;
      RngStream train_rng = seed_rng.derive(2);
      const TrainResult trained = train(start, train_set, nullptr, options, train_rng);
      const MapResult map = map_at_k(embed_all(trained.net, test_set), eval);
      report.rows.push_back({s, kind, map.at(1).mean, map.at(5).mean, trained.history.back().train_loss});
    }
  }
  return report;
}

void write_bench_csv(std::ostream& out, const BenchReport& report) {
  out << "seed,loss_kind,map1,map5,final_train_loss\n";
  for (const auto& r : report.rows) {
    out << r.seed_index << ',' << to_string(r.kind) << ',' << format_real(r.map1) << ','
        << format_real(r.map5) << ',' << format_real(r.final_train_loss) << '\n';
  }
  for (LossKind kind : {LossKind::siamese, LossKind::triplet}) {
    out << "mean," << to_string(kind) << ',' << format_real(report.mean_map1(kind)) << ','
        << format_real(report.mean_map5(kind)) << ",\n";
  }
}

void print_bench_table(std::ostream& out, const BenchReport& report) {
  char line[128];
  out << "seed  loss      mAP@1   mAP@5\n";
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof(line), "%-5zu %-8s  %.4f  %.4f\n", r.seed_index,
                  std::string(to_string(r.kind)).c_str(), r.map1, r.map5);
    out << line;
  }
  for (LossKind kind : {LossKind::siamese, LossKind::triplet}) {
    std::snprintf(line, sizeof(line), "mean  %-8s  %.4f  %.4f\n", std::string(to_string(kind)).c_str(),
                  report.mean_map1(kind), report.mean_map5(kind));
    out << line;
  }
}

}  // namespace reid
