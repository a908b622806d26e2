#include "reid/model.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "reid/error.hpp"

namespace reid {

namespace {

constexpr std::array<char, 8> kMagic = {'R', 'E', 'I', 'D', 'N', 'E', 'T', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (std::size_t i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
  out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw DataError("checkpoint truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void put_f64s(std::ostream& out, std::span<const double> values) {
  for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void get_f64s(std::istream& in, std::span<double> values) {
  for (double& v : values) v = std::bit_cast<double>(get_u64(in));
}

}  // namespace

ParamGrads& ParamGrads::operator+=(const ParamGrads& other) {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) {
    throw DimensionError("gradient sets have different layer counts");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    biases[i] += other.biases[i];
  }
  return *this;
}

ParamGrads& ParamGrads::operator*=(double scale) {
  for (auto& w : weights) w *= scale;
  for (auto& b : biases) b *= scale;
  return *this;
}

std::vector<std::span<const double>> ParamGrads::views() const {
  std::vector<std::span<const double>> out;
  out.reserve(weights.size() * 2);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(weights[i].values());
    out.push_back(biases[i].values());
  }
  return out;
}

EmbeddingNet EmbeddingNet::init(std::vector<std::size_t> layer_dims, RngStream& rng,
                                bool l2_normalize_output) {
  if (layer_dims.size() < 2) {
    throw ConfigError("model.dims needs an input and at least one layer, got " +
                      std::to_string(layer_dims.size()) + " dims");
  }
  for (std::size_t d : layer_dims) {
    if (d == 0) throw ConfigError("model.dims entries must be positive");
  }
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    const std::size_t fan_in = layer_dims[i];
    const std::size_t fan_out = layer_dims[i + 1];
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (double& v : w.values()) v = rng.normal(0.0, stddev);
    weights.push_back(std::move(w));
    biases.emplace_back(fan_out);
  }
  return EmbeddingNet(std::move(weights), std::move(biases), l2_normalize_output);
}

EmbeddingNet::EmbeddingNet(std::vector<Matrix> weights, std::vector<Vector> biases,
                           bool l2_normalize_output)
    : weights_(std::move(weights)), biases_(std::move(biases)), l2_normalize_(l2_normalize_output) {
  if (weights_.empty()) throw ConfigError("model needs at least one layer");
  dims_.push_back(weights_.front().cols());
  for (const auto& w : weights_) dims_.push_back(w.rows());
  validate();
}

void EmbeddingNet::validate() const {
  if (biases_.size() != weights_.size()) {
    throw DimensionError("model has " + std::to_string(weights_.size()) + " weight matrices but " +
                         std::to_string(biases_.size()) + " bias vectors");
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const std::string layer = "layer" + std::to_string(i);
    if (weights_[i].rows() == 0 || weights_[i].cols() == 0) {
      throw DimensionError(layer + " has an empty weight matrix");
    }
    if (weights_[i].cols() != dims_[i]) {
      throw DimensionError(layer + ".weight expects " + std::to_string(weights_[i].cols()) +
                           " inputs but the previous layer emits " + std::to_string(dims_[i]));
    }
    if (biases_[i].dim() != weights_[i].rows()) {
      throw DimensionError(layer + ".bias has dim " + std::to_string(biases_[i].dim()) +
                           ", expected " + std::to_string(weights_[i].rows()));
    }
    if (!weights_[i].all_finite() || !biases_[i].all_finite()) {
      throw DataError(layer + " holds non-finite parameters");
    }
  }
}

ForwardResult EmbeddingNet::forward(const Vector& x) const {
  require_same_dim(input_dim(), x.dim(), "model input");
  ForwardResult result;
  ForwardTrace& trace = result.trace;
  trace.input = x;
  const Vector* h = &trace.input;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    Vector z = weights_[i].multiply(*h);
    z += biases_[i];
    trace.pre_activations.push_back(std::move(z));
    if (i + 1 < weights_.size()) {
      Vector a = trace.pre_activations.back();
      for (double& v : a) v = v > 0.0 ? v : 0.0;
      trace.hidden.push_back(std::move(a));
      h = &trace.hidden.back();
    }
  }
  result.embedding = trace.pre_activations.back();
  if (l2_normalize_) {
    trace.output_norm = norm(result.embedding.values());
    if (trace.output_norm > 0.0) result.embedding *= 1.0 / trace.output_norm;
  }
  return result;
}

ParamGrads EmbeddingNet::backward(const ForwardTrace& trace, const Vector& grad_embedding) const {
  require_same_dim(embedding_dim(), grad_embedding.dim(), "embedding gradient");
  if (trace.pre_activations.size() != weights_.size() ||
      trace.hidden.size() + 1 != weights_.size() || trace.input.dim() != input_dim()) {
    throw DimensionError("forward trace does not belong to this network");
  }

  Vector delta = grad_embedding;
  if (l2_normalize_) {
    if (trace.output_norm == 0.0) return zero_grads();
    // d(z/|z|)/dz = (I - y y^T) / |z|
    Vector y = trace.pre_activations.back() * (1.0 / trace.output_norm);
    const double proj = dot(y.values(), grad_embedding.values());
    delta -= y * proj;
    delta *= 1.0 / trace.output_norm;
  }

  ParamGrads grads = zero_grads();
  for (std::size_t layer = weights_.size(); layer-- > 0;) {
    const Vector& below = layer == 0 ? trace.input : trace.hidden[layer - 1];
    Matrix& gw = grads.weights[layer];
    for (std::size_t r = 0; r < gw.rows(); ++r) {
      const double dr = delta[r];
      if (dr == 0.0) continue;
      for (std::size_t c = 0; c < gw.cols(); ++c) gw(r, c) = dr * below[c];
    }
    grads.biases[layer] = delta;
    if (layer == 0) break;
    Vector upstream = weights_[layer].multiply_transposed(delta);
    const Vector& z = trace.pre_activations[layer - 1];
    for (std::size_t k = 0; k < upstream.dim(); ++k) {
      if (!(z[k] > 0.0)) upstream[k] = 0.0;
    }
    delta = std::move(upstream);
  }
  return grads;
}

ParamGrads EmbeddingNet::zero_grads() const {
  ParamGrads g;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    g.weights.emplace_back(weights_[i].rows(), weights_[i].cols());
    g.biases.emplace_back(biases_[i].dim());
  }
  return g;
}

std::vector<ParamRef> EmbeddingNet::parameters() {
  std::vector<ParamRef> refs;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i);
    refs.push_back({prefix + ".weight", weights_[i].values()});
    refs.push_back({prefix + ".bias", biases_[i].values()});
  }
  return refs;
}

std::size_t EmbeddingNet::parameter_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weights_.size(); ++i) n += weights_[i].size() + biases_[i].dim();
  return n;
}

void EmbeddingNet::write(std::ostream& out) const {
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, dims_.size());
  for (std::size_t d : dims_) put_u64(out, d);
  put_u64(out, l2_normalize_ ? 1 : 0);
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    put_f64s(out, weights_[i].values());
    put_f64s(out, biases_[i].values());
  }
  if (!out) throw DataError("failed writing checkpoint");
}

EmbeddingNet EmbeddingNet::read(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("not a model checkpoint (bad magic)");
  const std::uint64_t count = get_u64(in);
  if (count < 2 || count > 64) {
    throw DataError("checkpoint declares " + std::to_string(count) + " layer dims");
  }
  std::vector<std::size_t> dims;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t d = get_u64(in);
    if (d == 0 || d > (1ULL << 24)) throw DataError("checkpoint layer dim out of range");
    dims.push_back(static_cast<std::size_t>(d));
  }
  const std::uint64_t flag = get_u64(in);
  if (flag > 1) throw DataError("checkpoint normalisation flag must be 0 or 1");
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Matrix w(dims[i + 1], dims[i]);
    get_f64s(in, w.values());
    Vector b(dims[i + 1]);
    get_f64s(in, b.values());
    weights.push_back(std::move(w));
    biases.push_back(std::move(b));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes after checkpoint");
  return EmbeddingNet(std::move(weights), std::move(biases), flag == 1);
}

void EmbeddingNet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write(out);
}

EmbeddingNet EmbeddingNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read(in);
}

}  // namespace reid
