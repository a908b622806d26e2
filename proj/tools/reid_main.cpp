// Command-line front end: synth, split, train, eval, census, gradcheck, bench.
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reid/census.hpp"
#include "reid/config.hpp"
#include "reid/dataset.hpp"
#include "reid/error.hpp"
#include "reid/eval.hpp"
#include "reid/gradcheck.hpp"
#include "reid/manifest.hpp"
#include "reid/pipeline.hpp"
#include "reid/split.hpp"
#include "reid/synth.hpp"
#include "reid/train.hpp"

namespace fs = std::filesystem;

namespace {

enum class EmbeddingSource { train, checkpoint, untrained, identity };

struct Flags {
  std::string config_file;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> manifest;
  std::optional<std::string> out;
  std::optional<std::string> fold;
  std::optional<std::string> loss;
  std::optional<std::size_t> epochs;
  std::optional<std::string> checkpoint;
  std::optional<std::size_t> repetitions;
  std::optional<std::string> threshold;
  std::optional<std::size_t> seeds;
  bool untrained = false;
  bool identity = false;
  std::size_t gradcheck_cases = 100;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "Config file ([section] / key = value)");
  cmd->add_option("--set", f.assignments, "Override any config key: section.key=value")->take_all();
  cmd->add_option("--seed", f.seed, "Global seed");
  cmd->add_option("--out", f.out, "Output directory");
}

void add_data(CLI::App* cmd, Flags& f) {
  cmd->add_option("--manifest", f.manifest, "Dataset manifest CSV");
}

void add_model_source(CLI::App* cmd, Flags& f) {
  cmd->add_option("--fold", f.fold, "Fold index or 'all'");
  cmd->add_option("--loss", f.loss, "siamese | triplet");
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--checkpoint", f.checkpoint, "Use this trained model instead of training");
  auto* untrained = cmd->add_flag("--untrained", f.untrained, "Use a freshly initialised network");
  cmd->add_flag("--identity", f.identity, "Use raw features as embeddings")->excludes(untrained);
}

reid::RunConfig resolve(const Flags& f) {
  reid::RunConfig cfg;
  if (!f.config_file.empty()) reid::apply_config(cfg, reid::load_config_file(f.config_file));
  for (const auto& a : f.assignments) reid::apply_assignment(cfg, a);
  if (f.seed) cfg.seed = *f.seed;
  if (f.manifest) cfg.dataset = *f.manifest;
  if (f.out) cfg.output = *f.out;
  if (f.fold) reid::apply_config(cfg, {{"run.fold", *f.fold}});
  if (f.loss) cfg.loss_kind = reid::parse_loss_kind(*f.loss);
  if (f.epochs) cfg.optim.epochs = *f.epochs;
  if (f.checkpoint) cfg.checkpoint = *f.checkpoint;
  if (f.repetitions) cfg.eval.repetitions = *f.repetitions;
  if (f.threshold) reid::apply_config(cfg, {{"census.threshold", *f.threshold}});
  if (f.seeds) cfg.bench.seeds = *f.seeds;
  cfg.validate();
  return cfg;
}

EmbeddingSource source_of(const Flags& f, const reid::RunConfig& cfg) {
  if (f.identity) return EmbeddingSource::identity;
  if (f.untrained) return EmbeddingSource::untrained;
  if (!cfg.checkpoint.empty()) return EmbeddingSource::checkpoint;
  return EmbeddingSource::train;
}

fs::path prepare_output(const reid::RunConfig& cfg) {
  const fs::path dir(cfg.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw reid::ConfigError("run.output: cannot create directory " + cfg.output);
  std::ofstream out(dir / "run_manifest", std::ios::trunc);
  if (!out) throw reid::ConfigError("run.output: directory " + cfg.output + " is not writable");
  reid::write_config(out, cfg);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw reid::DataError("cannot write " + path.string());
  return out;
}

reid::Manifest require_manifest(const reid::RunConfig& cfg) {
  if (cfg.dataset.empty()) throw reid::ConfigError("run.dataset: no manifest given (use --manifest)");
  reid::Manifest m = reid::load_manifest(cfg.dataset);
  const auto counts = m.counts_by_individual();
  std::cout << "manifest " << cfg.dataset << ": " << m.size() << " samples, " << counts.size()
            << " individuals\n";
  return m;
}

std::vector<std::size_t> folds_of(const reid::RunConfig& cfg) {
  if (cfg.fold) return {*cfg.fold};
  std::vector<std::size_t> all(cfg.split.folds);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

// Network for one fold, per the requested source. Returns nullopt for identity embeddings.
std::optional<reid::EmbeddingNet> net_for_fold(EmbeddingSource source, const reid::RunConfig& cfg,
                                               const reid::ManifestSplit& split, std::size_t fold,
                                               const fs::path& out_dir) {
  switch (source) {
    case EmbeddingSource::identity: return std::nullopt;
    case EmbeddingSource::checkpoint: return reid::EmbeddingNet::load(cfg.checkpoint);
    case EmbeddingSource::untrained:
      return reid::initial_net(cfg, reid::load_features(split.train).feature_dim(), fold);
    case EmbeddingSource::train: {
      reid::TrainResult trained = reid::train_fold(cfg, split, fold);
      auto log = open_out(out_dir / ("loss_log_fold" + std::to_string(fold) + ".csv"));
      reid::write_loss_log(log, trained.history);
      return std::move(trained.net);
    }
  }
  return std::nullopt;
}

int cmd_synth(const reid::RunConfig& cfg) {
  const fs::path dir = prepare_output(cfg);
  reid::RngStream rng = reid::purpose_stream(cfg.seed, reid::Purpose::synth);
  const reid::Manifest m = reid::synth_dataset(cfg.synth, rng);
  reid::save_manifest(dir / "manifest.csv", m);
  std::cout << "wrote " << (dir / "manifest.csv").string() << ": " << m.size() << " samples, "
            << m.num_individuals() << " individuals\n";
  return 0;
}

int cmd_split(const reid::RunConfig& cfg) {
  const fs::path dir = prepare_output(cfg);
  const reid::Manifest m = require_manifest(cfg);
  const reid::SplitPlan plan = reid::five_fold_plan(m, reid::resolved_split(cfg));
  auto out = open_out(dir / "split_plan.csv");
  reid::write_split_plan(out, plan);
  for (std::size_t f = 0; f < plan.num_folds(); ++f) {
    const reid::ManifestSplit s = reid::apply_fold(m, plan, f);
    std::cout << "fold " << f << ": train " << s.train.size() << " / val " << s.val.size() << " / test "
              << s.test.size() << " images\n";
  }
  if (plan.test_overlap > 0) {
    std::cout << "note: " << plan.test_overlap << " individuals are tested in more than one fold\n";
  }
  return 0;
}

int cmd_train(const reid::RunConfig& cfg) {
  const fs::path dir = prepare_output(cfg);
  const reid::Manifest m = require_manifest(cfg);
  const std::size_t fold = cfg.fold.value_or(0);
  const reid::ManifestSplit split = reid::split_by_individual(m, reid::resolved_split(cfg), fold);
  const reid::TrainResult trained = reid::train_fold(cfg, split, fold);
  trained.net.save(dir / "model.bin");
  auto log = open_out(dir / "loss_log.csv");
  reid::write_loss_log(log, trained.history);
  std::cout << "fold " << fold << ": " << trained.history.size() << " epochs, final train loss "
            << reid::format_real(trained.history.back().train_loss)
            << (trained.stopped_early ? " (stopped early)" : "") << '\n';
  return 0;
}

int cmd_eval(const reid::RunConfig& cfg, EmbeddingSource source) {
  const fs::path dir = prepare_output(cfg);
  const reid::Manifest m = require_manifest(cfg);
  const reid::SplitPlan plan = reid::five_fold_plan(m, reid::resolved_split(cfg));
  if (plan.test_overlap > 0) {
    std::cout << "note: " << plan.test_overlap << " individuals are tested in more than one fold\n";
  }
  std::vector<reid::ResultRow> rows;
  for (std::size_t fold : folds_of(cfg)) {
    const reid::ManifestSplit split = reid::apply_fold(m, plan, fold);
    const auto net = net_for_fold(source, cfg, split, fold, dir);
    reid::MapResult result;
    if (net) {
      result = reid::evaluate_fold(cfg, *net, split.test, fold);
    } else {
      reid::EvalConfig eval = cfg.eval;
      eval.seed = reid::purpose_stream(cfg.seed, reid::Purpose::eval).derive(fold).seed();
      result = reid::map_at_k(reid::identity_embedding(reid::load_features(split.test)), eval);
    }
    rows.push_back(reid::result_row(cfg, m, result, std::to_string(fold)));
    std::printf("fold %zu: mAP@1 %.4f +- %.4f  mAP@5 %.4f +- %.4f  (%zu queries, %zu single-image individuals)\n",
                fold, rows.back().map1_mean, rows.back().map1_std, rows.back().map5_mean,
                rows.back().map5_std, result.eligible_queries, result.excluded_queries);
  }
  rows.push_back(reid::aggregate_folds(rows));
  std::printf("mean over folds: mAP@1 %.4f  mAP@5 %.4f\n", rows.back().map1_mean, rows.back().map5_mean);
  auto out = open_out(dir / "results.csv");
  reid::write_results_csv(out, rows);
  return 0;
}

int cmd_census(const reid::RunConfig& cfg, EmbeddingSource source) {
  const fs::path dir = prepare_output(cfg);
  const reid::Manifest m = require_manifest(cfg);
  const std::size_t fold = cfg.fold.value_or(0);
  const reid::ManifestSplit split = reid::split_by_individual(m, reid::resolved_split(cfg), fold);
  const auto net = net_for_fold(source, cfg, split, fold, dir);
  const reid::EmbeddingNet* net_ptr = net ? &*net : nullptr;

  const reid::RngStream rng = reid::purpose_stream(cfg.seed, reid::Purpose::census);
  double threshold = 0.0;
  if (cfg.census.threshold) {
    threshold = *cfg.census.threshold;
  } else {
    const reid::LabeledFeatures val = reid::load_features(split.val);
    const bool val_usable = val.num_individuals() >= 2;
    reid::RngStream calib = rng.derive(0);
    const auto calibration =
        reid::calibrate_on(net_ptr, val_usable ? val : reid::load_features(split.train), calib);
    threshold = calibration.threshold;
    std::cout << "calibrated threshold " << reid::format_real(threshold) << " on "
              << (val_usable ? "validation" : "training") << " split (accuracy "
              << reid::format_real(calibration.accuracy) << ")\n";
  }
  reid::RngStream order = rng.derive(1);
  const auto stream = reid::sightings_from(split.test, cfg.census.shuffle, order);
  const reid::CensusReport report = reid::run_census(stream, threshold, net_ptr, cfg.census.max_exemplars);
  auto out = open_out(dir / "census_report.csv");
  reid::write_census_report(out, report);
  std::cout << "estimated population " << report.estimated_population;
  if (report.true_population) std::cout << " (true " << *report.true_population << ")";
  std::cout << " from " << stream.size() << " sightings\n";
  return 0;
}

int cmd_gradcheck(const reid::RunConfig& cfg, std::size_t cases) {
  const reid::GradcheckReport r = reid::run_gradcheck(cfg.seed, cases);
  std::printf("contrastive      %zu cases  max relative error %.3e\n", r.contrastive.cases,
              r.contrastive.max_relative_error);
  std::printf("triplet          %zu cases  max relative error %.3e\n", r.triplet.cases,
              r.triplet.max_relative_error);
  std::printf("network/siamese  %zu cases  max relative error %.3e\n", r.network_siamese.cases,
              r.network_siamese.max_relative_error);
  std::printf("network/triplet  %zu cases  max relative error %.3e\n", r.network_triplet.cases,
              r.network_triplet.max_relative_error);
  std::printf("max relative error %.3e\n", r.max_relative_error());
  return r.max_relative_error() < 1e-5 ? 0 : 2;
}

int cmd_bench(const reid::RunConfig& cfg) {
  const fs::path dir = prepare_output(cfg);
  const reid::BenchReport report = reid::run_benchmark(cfg);
  auto out = open_out(dir / "bench.csv");
  reid::write_bench_csv(out, report);
  reid::print_bench_table(std::cout, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity-learning re-identification: training, evaluation and census"};
  app.require_subcommand(1);
  Flags f;

  auto* synth = app.add_subcommand("synth", "Write a synthetic manifest");
  add_common(synth, f);
  auto* split = app.add_subcommand("split", "Write the five-fold individual-disjoint split plan");
  add_common(split, f);
  add_data(split, f);
  auto* train = app.add_subcommand("train", "Train on one fold; write model.bin and loss_log.csv");
  add_common(train, f);
  add_data(train, f);
  add_model_source(train, f);
  auto* eval = app.add_subcommand("eval", "Monte-Carlo mAP@1/mAP@5 per fold; write results.csv");
  add_common(eval, f);
  add_data(eval, f);
  add_model_source(eval, f);
  eval->add_option("--repetitions", f.repetitions, "Episodes per evaluation");
  auto* census = app.add_subcommand("census", "Open-set census over a fold's test split");
  add_common(census, f);
  add_data(census, f);
  add_model_source(census, f);
  census->add_option("--threshold", f.threshold, "Match threshold, 'inf', or 'auto'");
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference checks of every gradient");
  add_common(gradcheck, f);
  gradcheck->add_option("--cases", f.gradcheck_cases, "Cases per suite")->check(CLI::PositiveNumber);
  auto* bench = app.add_subcommand("bench", "Synthetic Siamese vs triplet comparison");
  add_common(bench, f);
  bench->add_option("--seeds", f.seeds, "Number of seeds");
  bench->add_option("--epochs", f.epochs, "Training epochs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    const reid::RunConfig cfg = resolve(f);
    if (*synth) return cmd_synth(cfg);
    if (*split) return cmd_split(cfg);
    if (*train) return cmd_train(cfg);
    if (*eval) return cmd_eval(cfg, source_of(f, cfg));
    if (*census) return cmd_census(cfg, source_of(f, cfg));
    if (*gradcheck) return cmd_gradcheck(cfg, f.gradcheck_cases);
    if (*bench) return cmd_bench(cfg);
  } catch (const reid::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
