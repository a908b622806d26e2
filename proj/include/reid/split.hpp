#pragma once

/** \file split.hpp
 *  \brief Individual-disjoint train/validation/test splits and their
 *         five-fold rotation.
 *
 * Individuals, not images, are assigned to splits, so no individual ever
 * contributes images to more than one split of a fold. Assignment targets
 * image fractions: individuals are shuffled, ordered largest-first, dealt into
 * `folds` groups of near-equal image count, and fold i tests on group i.
 * Validation individuals are then drawn greedily from the remaining groups,
 * starting after group i, until the validation image target is met.
 *
 * When the test ratio is not 1/folds the fold test sets cannot partition the
 * individuals. A larger ratio extends group i with individuals from the
 * following groups; a smaller one takes only part of group i. Fold test sets
 * may then overlap, which the plan reports.
 */

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "reid/manifest.hpp"

namespace reid {

enum class Role { train, val, test };

[[nodiscard]] std::string_view to_string(Role role);

struct SplitConfig {
  /// train, validation, test
  std::array<double, 3> ratios{0.7, 0.1, 0.2};
  std::size_t folds = 5;
  std::uint64_t seed = 0;

  [[nodiscard]] double train_ratio() const noexcept { return ratios[0]; }
  [[nodiscard]] double val_ratio() const noexcept { return ratios[1]; }
  [[nodiscard]] double test_ratio() const noexcept { return ratios[2]; }
  /// True when the fold test sets partition the individuals.
  [[nodiscard]] bool partitions_test_sets() const noexcept;
  void validate() const;
};

struct SplitPlan {
  /// One role map per fold, keyed by individual id.
  std::vector<std::map<std::string, Role>> folds;
  /// Individuals that are tested in more than one fold.
  std::size_t test_overlap = 0;

  [[nodiscard]] std::size_t num_folds() const noexcept { return folds.size(); }
  [[nodiscard]] std::vector<std::string> individuals(std::size_t fold, Role role) const;
};

struct ManifestSplit {
  Manifest train;
  Manifest val;
  Manifest test;
};

/// Throws DataError with fewer than max(folds, 3) individuals.
[[nodiscard]] SplitPlan five_fold_plan(const Manifest& manifest, const SplitConfig& cfg);

/// Materialises one fold of the plan. Deterministic in (cfg.seed, fold).
[[nodiscard]] ManifestSplit split_by_individual(const Manifest& manifest, const SplitConfig& cfg,
                                                std::size_t fold);
[[nodiscard]] ManifestSplit apply_fold(const Manifest& manifest, const SplitPlan& plan,
                                       std::size_t fold);

/// CSV `fold,individual_id,role`, folds ascending, ids sorted.
void write_split_plan(std::ostream& out, const SplitPlan& plan);

}  // namespace reid
