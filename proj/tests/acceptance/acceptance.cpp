#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "reid/census.hpp"
#include "reid/config.hpp"
#include "reid/dataset.hpp"
#include "reid/eval.hpp"
#include "reid/gradcheck.hpp"
#include "reid/pipeline.hpp"
#include "reid/split.hpp"
#include "reid/synth.hpp"
#include "../support/oracles.hpp"

using namespace reid;
namespace fs = std::filesystem;

namespace {

// Every mAP result produced below, for the ordering check.
std::vector<std::pair<double, double>> g_map_pairs;

void record(const MapResult& r) { g_map_pairs.emplace_back(r.at(1).mean, r.at(5).mean); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(4);
  out << v;
  return out.str();
}

double mean_of(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  return m / static_cast<double>(xs.size());
}

double se_of(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return std::sqrt(v / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

EmbeddedSet random_set(std::size_t individuals, std::size_t per, std::size_t dim, RngStream& rng) {
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

Outcome gradients() {
  const GradcheckReport r = run_gradcheck(1, 100);
  const GradcheckSuite* suites[] = {&r.contrastive, &r.triplet, &r.network_siamese, &r.network_triplet};
  bool ok = true;
  for (const auto* s : suites) ok = ok && s->cases >= 100 && s->max_relative_error < 1e-5;
  return {ok, "contrastive " + fmt(r.contrastive.max_relative_error) + ", triplet " +
                  fmt(r.triplet.max_relative_error) + ", net/siamese " +
                  fmt(r.network_siamese.max_relative_error) + ", net/triplet " +
                  fmt(r.network_triplet.max_relative_error)};
}

Outcome oracle_equivalence() {
  RngStream rng(11);
  const EmbeddedSet set = random_set(3, 3, 2, rng);
  std::vector<oracle::Vec> raw;
  for (const auto& e : set.embeddings) raw.push_back(e.storage());
  EvalConfig cfg;
  cfg.repetitions = 1000;
  cfg.seed = 12;
  const MapResult r = map_at_k(set, cfg);
  record(r);
  bool ok = true;
  std::string detail;
  for (std::size_t k : {1u, 5u}) {
    const double exact = oracle::exhaustive_map(raw, set.labels, k);
    const double gap = std::abs(r.at(k).mean - exact) / r.at(k).standard_error();
    ok = ok && gap <= 3.0;
    detail += "k=" + std::to_string(k) + " sampled " + fmt(r.at(k).mean) + " exact " + fmt(exact) + " (" +
              fmt(gap) + " SE) ";
  }
  return {ok, detail};
}

Outcome chance_level() {
  // Each draw fixes a fresh set of random embeddings; the expected mAP@1 over
  // draws is 1/N, and the standard error is taken across draws.
  bool ok = true;
  std::string detail;
  RngStream rng(21);
  for (std::size_t n : {5u, 10u, 20u}) {
    std::vector<double> means;
    for (std::size_t d = 0; d < 200; ++d) {
      const EmbeddedSet set = random_set(n, 4, 16, rng);
      EvalConfig cfg;
      cfg.repetitions = 100;
      cfg.seed = 1000 * n + d;
      const MapResult r = map_at_k(set, cfg);
      record(r);
      means.push_back(r.at(1).mean);
    }
    const double m = mean_of(means);
    const double gap = std::abs(m - 1.0 / static_cast<double>(n)) / se_of(means);
    ok = ok && gap <= 3.0;
    detail += "N=" + std::to_string(n) + " " + fmt(m) + " (" + fmt(gap) + " SE) ";
  }
  return {ok, detail};
}

Outcome benchmark() {
  RunConfig cfg;
  const BenchReport r = run_benchmark(cfg);
  for (const auto& row : r.rows) g_map_pairs.emplace_back(row.map1, row.map5);
  const double triplet = r.mean_map1(LossKind::triplet);
  const double siamese = r.mean_map1(LossKind::siamese);
  const bool ok = cfg.bench.seeds >= 5 && triplet >= siamese && triplet >= 0.5 && siamese >= 0.5;
  return {ok, "triplet " + fmt(triplet) + " vs siamese " + fmt(siamese) + " over " +
                  std::to_string(cfg.bench.seeds) + " seeds"};
}

Outcome trainability() {
  RunConfig cfg;
  cfg.seed = 5;
  cfg.bench.spread = 0.03;
  cfg.bench.seeds = 3;
  const BenchReport r = run_benchmark(cfg);
  double worst = 1.0;
  for (const auto& row : r.rows) {
    g_map_pairs.emplace_back(row.map1, row.map5);
    if (row.kind == LossKind::triplet) worst = std::min(worst, row.map1);
  }
  return {worst >= 0.95, "lowest triplet mAP@1 on unseen individuals " + fmt(worst)};
}

Outcome split_protocol() {
  bool ok = true;
  double worst = 0.0;
  std::size_t checks = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream rng(seed);
    Manifest m;
    const std::size_t individuals = 50 + 13 * seed;
    for (std::size_t i = 0; i < individuals; ++i) {
      const std::size_t images = 5 + rng.uniform_index(60);
      for (std::size_t k = 0; k < images; ++k) {
        m.entries.push_back({"img/" + std::to_string(i) + "_" + std::to_string(k) + ".pgm",
                             "id" + std::to_string(i), std::nullopt});
      }
    }
    SplitConfig cfg;
    cfg.seed = seed;
    const SplitPlan plan = five_fold_plan(m, cfg);
    std::set<std::string> tested;
    for (std::size_t f = 0; f < plan.num_folds(); ++f) {
      const ManifestSplit s = apply_fold(m, plan, f);
      const auto tr = s.train.counts_by_individual();
      const auto va = s.val.counts_by_individual();
      const auto te = s.test.counts_by_individual();
      for (const auto& [id, c] : tr) ok = ok && !va.count(id) && !te.count(id);
      for (const auto& [id, c] : va) ok = ok && !te.count(id);
      ok = ok && tr.size() + va.size() + te.size() == individuals;
      for (const auto& [id, c] : te) ok = ok && tested.insert(id).second;
      const double n = static_cast<double>(m.size());
      const double fractions[] = {static_cast<double>(s.train.size()) / n, static_cast<double>(s.val.size()) / n,
                                  static_cast<double>(s.test.size()) / n};
      for (std::size_t r = 0; r < 3; ++r) worst = std::max(worst, std::abs(fractions[r] - cfg.ratios[r]));
      ++checks;
    }
    ok = ok && tested.size() == individuals;
  }
  ok = ok && worst <= 0.02;
  return {ok, std::to_string(checks) + " folds disjoint, test sets partition, worst fraction error " + fmt(worst)};
}

Outcome ordering() {
  // A sweep over embedding quality adds runs across the whole mAP range.
  RngStream rng(71);
  for (double spread : {0.0, 0.1, 0.3, 1.0, 3.0}) {
    for (std::size_t d = 0; d < 10; ++d) {
      EmbeddedSet set;
      for (std::size_t i = 0; i < 8; ++i) {
        Vector centre(6);
        for (double& x : centre.values()) x = rng.normal();
        set.label_names.push_back("id" + std::to_string(i));
        for (std::size_t k = 0; k < 3; ++k) {
          Vector v = centre;
          for (double& x : v.values()) x += spread * rng.normal();
          set.embeddings.push_back(v);
          set.labels.push_back(static_cast<Label>(i));
        }
      }
      EvalConfig cfg;
      cfg.repetitions = 200;
      cfg.seed = d;
      record(map_at_k(set, cfg));
    }
  }
  std::size_t violations = 0;
  for (const auto& [m1, m5] : g_map_pairs) violations += m5 < m1 ? 1 : 0;
  return {violations == 0, std::to_string(g_map_pairs.size()) + " runs, " + std::to_string(violations) +
                               " with mAP@5 < mAP@1"};
}

Outcome census() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RngStream rng(100 + seed);
    SynthConfig sc;
    sc.num_individuals = 12;
    sc.images_per_individual = 10;
    sc.feature_dim = 8;
    sc.cluster_spread = 0.02;
    sc.inter_cluster_distance = 0.8;
    const Manifest calibration = synth_dataset(sc, rng);
    sc.num_individuals = 6 + seed;
    sc.id_prefix = "new";
    const Manifest field = synth_dataset(sc, rng);

    const ThresholdCalibration cal = calibrate_on(nullptr, load_features(calibration), rng);
    const std::vector<Sighting> stream = sightings_from(field, true, rng);
    const CensusReport r = run_census(stream, cal.threshold, nullptr);
    const CensusReport zero = run_census(stream, 0.0, nullptr);
    const CensusReport inf = run_census(stream, std::numeric_limits<double>::infinity(), nullptr);
    ok = ok && r.estimated_population == r.true_population.value() && zero.estimated_population == stream.size() &&
         inf.estimated_population == 1;
    detail += std::to_string(r.estimated_population) + "/" + std::to_string(*r.true_population) + " ";
  }
  return {ok, "estimated/true " + detail + "; degenerate thresholds give stream length and 1"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool run_cli(const std::string& args) {
  const std::string command = std::string(REID_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(command.c_str()) == 0;
}

Outcome determinism() {
  const fs::path root = fs::path("acceptance_determinism");
  fs::remove_all(root);
  const std::string common =
      " --seed 7 --set optim.epochs=8 --set synth.individuals=12 --set synth.images=8 --set eval.repetitions=200";
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    const std::string out = " --out " + dir.string();
    const std::string manifest = " --manifest " + (dir / "manifest.csv").string();
    if (!run_cli("synth" + common + out) || !run_cli("train --fold 0" + common + out + manifest) ||
        !run_cli("eval --fold all" + common + out + manifest) ||
        !run_cli("census --fold 0" + common + out + manifest)) {
      return {false, std::string("CLI run ") + run + " failed"};
    }
  }
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const std::string name = entry.path().filename().string();
    if (name == "run_manifest") continue;
    const fs::path other = root / "b" / name;
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) differing.push_back(name);
    ++compared;
  }
  for (const char* required : {"loss_log.csv", "results.csv", "census_report.csv"}) {
    if (!fs::exists(root / "a" / required)) differing.push_back(std::string("missing ") + required);
  }
  std::string detail = std::to_string(compared) + " files compared";
  for (const auto& d : differing) detail += ", differs: " + d;
  return {differing.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double limit_seconds;
  };
  const std::vector<Criterion> criteria{
      {"gradient correctness", gradients, 60.0},
      {"mAP oracle equivalence", oracle_equivalence, 60.0},
      {"chance-level calibration", chance_level, 0.0},
      {"triplet beats siamese on the benchmark", benchmark, 600.0},
      {"trainability on unseen individuals", trainability, 300.0},
      {"split protocol", split_protocol, 0.0},
      {"mAP@5 >= mAP@1", ordering, 0.0},
      {"census correctness", census, 0.0},
      {"determinism across processes", determinism, 0.0},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criteria[i].limit_seconds > 0.0 && seconds > criteria[i].limit_seconds) {
      o.pass = false;
      o.detail += " (over the " + fmt(criteria[i].limit_seconds) + " s limit)";
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str(),
                seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
