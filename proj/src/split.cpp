#include "reid/split.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "reid/error.hpp"

namespace reid {

namespace {

constexpr double kRatioTolerance = 1e-9;

struct Individual {
  std::string id;
  std::size_t images = 0;
};

// Greedy subset selection: walk candidates in order and keep each one that
// moves the running image total closer to the target.
std::vector<std::size_t> greedy_fill(const std::vector<Individual>& candidates, double target,
                                     double start = 0.0) {
  std::vector<std::size_t> chosen;
  double total = start;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double next = total + static_cast<double>(candidates[i].images);
    if (std::abs(next - target) < std::abs(total - target)) {
      chosen.push_back(i);
      total = next;
    }
  }
  return chosen;
}

void largest_first(std::vector<Individual>& v) {
  std::stable_sort(v.begin(), v.end(),
                   [](const Individual& a, const Individual& b) { return a.images > b.images; });
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::train: return "train";
    case Role::val: return "val";
    case Role::test: return "test";
  }
  return "unknown";
}

bool SplitConfig::partitions_test_sets() const noexcept {
  return std::abs(test_ratio() - 1.0 / static_cast<double>(folds)) <= kRatioTolerance;
}

void SplitConfig::validate() const {
  static constexpr const char* kNames[] = {"split.train", "split.val", "split.test"};
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!(ratios[i] > 0.0) || !std::isfinite(ratios[i])) {
      throw ConfigError(std::string(kNames[i]) + " ratio must be > 0");
    }
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > kRatioTolerance) {
    throw ConfigError("split ratios must sum to 1");
  }
  if (folds < 2) throw ConfigError("split.folds must be at least 2");
}

std::vector<std::string> SplitPlan::individuals(std::size_t fold, Role role) const {
  std::vector<std::string> out;
  for (const auto& [id, r] : folds.at(fold)) {
    if (r == role) out.push_back(id);
  }
  return out;
}

SplitPlan five_fold_plan(const Manifest& manifest, const SplitConfig& cfg) {
  cfg.validate();
  const auto counts = manifest.counts_by_individual();
  const std::size_t needed = std::max<std::size_t>(cfg.folds, 3);
  if (counts.size() < needed) {
    throw DataError("splitting into " + std::to_string(cfg.folds) + " folds needs at least " +
                    std::to_string(needed) + " individuals, manifest has " +
                    std::to_string(counts.size()));
  }

  std::vector<Individual> order;
  double total_images = 0.0;
  for (const auto& [id, n] : counts) {
    order.push_back({id, n});
    total_images += static_cast<double>(n);
  }
  RngStream rng = RngStream(cfg.seed).derive(0);
  rng.shuffle(order);
  largest_first(order);

  // Deal into groups of near-equal image count (longest processing time first).
  std::vector<std::vector<Individual>> groups(cfg.folds);
  std::vector<std::size_t> group_images(cfg.folds, 0);
  for (const auto& ind : order) {
    const auto g = static_cast<std::size_t>(
        std::min_element(group_images.begin(), group_images.end()) - group_images.begin());
    groups[g].push_back(ind);
    group_images[g] += ind.images;
  }

  const double test_target = cfg.test_ratio() * total_images;
  const double val_target = cfg.val_ratio() * total_images;

  SplitPlan plan;
  std::map<std::string, std::size_t> times_tested;
  for (std::size_t fold = 0; fold < cfg.folds; ++fold) {
    // Candidates from the other groups, in rotation order starting after this fold's group.
    std::vector<Individual> rotation;
    for (std::size_t step = 1; step < cfg.folds; ++step) {
      const auto& g = groups[(fold + step) % cfg.folds];
      rotation.insert(rotation.end(), g.begin(), g.end());
    }

    std::vector<Individual> test;
    std::vector<Individual> rest;
    const auto& own = groups[fold];
    if (cfg.partitions_test_sets()) {
      test = own;
      rest = rotation;
    } else if (cfg.test_ratio() > 1.0 / static_cast<double>(cfg.folds)) {
      test = own;
      double have = 0.0;
      for (const auto& ind : own) have += static_cast<double>(ind.images);
      std::vector<char> taken(rotation.size(), 0);
      for (std::size_t i : greedy_fill(rotation, test_target, have)) taken[i] = 1;
      for (std::size_t i = 0; i < rotation.size(); ++i) {
        (taken[i] ? test : rest).push_back(rotation[i]);
      }
    } else {
      auto picks = greedy_fill(own, test_target);
      if (picks.empty()) picks.push_back(0);
      std::vector<char> taken(own.size(), 0);
      for (std::size_t i : picks) taken[i] = 1;
      rest = rotation;
      for (std::size_t i = 0; i < own.size(); ++i) {
        (taken[i] ? test : rest).push_back(own[i]);
      }
    }

    largest_first(rest);
    auto val_picks = greedy_fill(rest, val_target);
    if (val_picks.empty() && !rest.empty()) val_picks.push_back(rest.size() - 1);
    if (val_picks.size() >= rest.size()) {
      throw DataError("fold " + std::to_string(fold) + " leaves no training individuals");
    }

    std::map<std::string, Role> roles;
    for (const auto& ind : rest) roles[ind.id] = Role::train;
    for (std::size_t i : val_picks) roles[rest[i].id] = Role::val;
    for (const auto& ind : test) {
      roles[ind.id] = Role::test;
      ++times_tested[ind.id];
    }
    plan.folds.push_back(std::move(roles));
  }
  for (const auto& [id, n] : times_tested) {
    if (n > 1) ++plan.test_overlap;
  }
  return plan;
}

ManifestSplit apply_fold(const Manifest& manifest, const SplitPlan& plan, std::size_t fold) {
  if (fold >= plan.num_folds()) {
    throw ConfigError("fold " + std::to_string(fold) + " out of range [0, " +
                      std::to_string(plan.num_folds()) + ")");
  }
  const auto& roles = plan.folds[fold];
  ManifestSplit out;
  for (Manifest* m : {&out.train, &out.val, &out.test}) {
    m->species_tag = manifest.species_tag;
    m->base_dir = manifest.base_dir;
  }
  for (const auto& e : manifest.entries) {
    const auto it = roles.find(e.individual_id);
    if (it == roles.end()) throw DataError("individual '" + e.individual_id + "' missing from plan");
    switch (it->second) {
      case Role::train: out.train.entries.push_back(e); break;
      case Role::val: out.val.entries.push_back(e); break;
      case Role::test: out.test.entries.push_back(e); break;
    }
  }
  return out;
}

ManifestSplit split_by_individual(const Manifest& manifest, const SplitConfig& cfg,
                                  std::size_t fold) {
  cfg.validate();
  if (fold >= cfg.folds) {
    throw ConfigError("fold " + std::to_string(fold) + " out of range [0, " +
                      std::to_string(cfg.folds) + ")");
  }
  return apply_fold(manifest, five_fold_plan(manifest, cfg), fold);
}

void write_split_plan(std::ostream& out, const SplitPlan& plan) {
  out << "fold,individual_id,role\n";
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    for (const auto& [id, role] : plan.folds[f]) out << f << ',' << id << ',' << to_string(role) << '\n';
  }
}

}  // namespace reid
