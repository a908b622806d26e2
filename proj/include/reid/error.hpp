#pragma once

#include <stdexcept>
#include <string>

namespace reid {

/// Operands disagree in dimension or shape. Always a caller bug.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration value violates its invariant. The message names the field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (manifests, images, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A batch cannot supply the pairs or triplets an objective needs.
class MiningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace reid
