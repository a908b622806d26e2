#pragma once

/** \file gradcheck.hpp
 *  \brief Finite-difference verification of the analytic gradients, used by
 *         the `gradcheck` subcommand.
 *
 * Each case compares the analytic gradient g of one loss evaluation,
 * concatenated over every input (or every network parameter), against
 * central differences f (step 1e-5) using the relative error
 * ||g - f|| / max(||g||, ||f||), taken as 0 when both vanish. Cases within
 * 1e-4 of a hinge or rectifier kink are redrawn, as are network cases with no
 * active loss terms.
 */

#include <cstddef>
#include <cstdint>

namespace reid {

struct GradcheckSuite {
  std::size_t cases = 0;
  double max_relative_error = 0.0;
};

struct GradcheckReport {
  GradcheckSuite contrastive;
  GradcheckSuite triplet;
  GradcheckSuite network_siamese;
  GradcheckSuite network_triplet;

  [[nodiscard]] double max_relative_error() const;
};

[[nodiscard]] GradcheckReport run_gradcheck(std::uint64_t seed, std::size_t cases_per_suite = 100);

}  // namespace reid
