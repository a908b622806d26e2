#pragma once

/** \file model.hpp
 *  \brief Fully connected embedding network with exact backpropagation.
 *
 * Hidden layers apply a rectifier (subgradient 0 at 0); the output layer is
 * linear, optionally followed by projection onto the unit sphere.
 *
 * Checkpoint layout (all integers and reals little-endian):
 *   8 bytes   magic "REIDNET1"
 *   u64       number of layer dims L (>= 2)
 *   u64 x L   layer dims
 *   u64       l2_normalize_output flag (0 or 1)
 *   per layer i in order:
 *     f64 x dims[i+1]*dims[i]   weights, row-major (output row, input column)
 *     f64 x dims[i+1]           biases
 */

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "reid/numeric.hpp"

namespace reid {

inline constexpr std::size_t kDefaultEmbeddingDim = 128;

struct ForwardTrace {
  Vector input;
  /// Pre-activation of every layer, output layer last.
  std::vector<Vector> pre_activations;
  /// Rectified hidden activations (one per hidden layer).
  std::vector<Vector> hidden;
  /// Norm of the linear output, recorded when the output is normalised.
  double output_norm = 0.0;
};

struct ForwardResult {
  Vector embedding;
  ForwardTrace trace;
};

/// Named, mutable view of one parameter tensor.
struct ParamRef {
  std::string name;
  std::span<double> values;
};

struct ParamGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  ParamGrads& operator+=(const ParamGrads& other);
  ParamGrads& operator*=(double scale);
  /// Gradient spans in the same order as EmbeddingNet::parameters().
  [[nodiscard]] std::vector<std::span<const double>> views() const;
};

class EmbeddingNet {
 public:
  /// He-scaled Gaussian weights (std = sqrt(2 / fan_in)), zero biases.
  static EmbeddingNet init(std::vector<std::size_t> layer_dims, RngStream& rng,
                           bool l2_normalize_output = false);

  /// Takes explicit parameters. Shapes must chain: weights[i] is dims[i+1] x dims[i].
  EmbeddingNet(std::vector<Matrix> weights, std::vector<Vector> biases,
               bool l2_normalize_output = false);

  [[nodiscard]] const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  [[nodiscard]] std::size_t input_dim() const noexcept { return dims_.front(); }
  [[nodiscard]] std::size_t embedding_dim() const noexcept { return dims_.back(); }
  [[nodiscard]] std::size_t num_layers() const noexcept { return weights_.size(); }
  [[nodiscard]] bool l2_normalize_output() const noexcept { return l2_normalize_; }

  [[nodiscard]] const std::vector<Matrix>& weights() const noexcept { return weights_; }
  [[nodiscard]] const std::vector<Vector>& biases() const noexcept { return biases_; }
  [[nodiscard]] Matrix& weight(std::size_t layer) { return weights_.at(layer); }
  [[nodiscard]] Vector& bias(std::size_t layer) { return biases_.at(layer); }

  [[nodiscard]] ForwardResult forward(const Vector& x) const;
  [[nodiscard]] Vector embed(const Vector& x) const { return forward(x).embedding; }

  /// Gradient of dot(grad_embedding, embedding) with respect to every parameter.
  [[nodiscard]] ParamGrads backward(const ForwardTrace& trace, const Vector& grad_embedding) const;

  [[nodiscard]] ParamGrads zero_grads() const;
  /// Names are "layer<i>.weight" and "layer<i>.bias".
  [[nodiscard]] std::vector<ParamRef> parameters();
  [[nodiscard]] std::size_t parameter_count() const noexcept;

  void write(std::ostream& out) const;
  static EmbeddingNet read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static EmbeddingNet load(const std::filesystem::path& path);

  bool operator==(const EmbeddingNet&) const = default;

 private:
  void validate() const;

  std::vector<std::size_t> dims_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  bool l2_normalize_ = false;
};

}  // namespace reid
