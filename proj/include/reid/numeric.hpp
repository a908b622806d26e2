#pragma once

/** \file numeric.hpp
 *  \brief Dense vectors/matrices in double precision, Euclidean distance,
 *         and the seeded random streams every other module draws from.
 */

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace reid {

/// Fixed-dimension real vector. Embeddings, features and biases are all Vectors.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}
  Vector(std::initializer_list<double> values) : data_(values) {}

  [[nodiscard]] std::size_t dim() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  [[nodiscard]] std::span<double> values() noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
  [[nodiscard]] const std::vector<double>& storage() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  [[nodiscard]] bool all_finite() const noexcept;

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double scale) noexcept;

  friend Vector operator+(Vector lhs, const Vector& rhs) { return lhs += rhs; }
  friend Vector operator-(Vector lhs, const Vector& rhs) { return lhs -= rhs; }
  friend Vector operator*(Vector lhs, double scale) { return lhs *= scale; }
  friend Vector operator*(double scale, Vector rhs) { return rhs *= scale; }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  [[nodiscard]] std::span<double> values() noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  [[nodiscard]] bool all_finite() const noexcept;

  /// y = M x
  [[nodiscard]] Vector multiply(const Vector& x) const;
  /// y = M^T x
  [[nodiscard]] Vector multiply_transposed(const Vector& x) const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator*=(double scale) noexcept;
  bool operator==(const Matrix&) const = default;

  static Matrix identity(std::size_t n);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Throws DimensionError when the sizes differ.
void require_same_dim(std::size_t a, std::size_t b, const char* what = "vector");

[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double squared_distance(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double euclidean_distance(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double norm(std::span<const double> a);

inline double squared_distance(const Vector& a, const Vector& b) {
  return squared_distance(a.values(), b.values());
}
inline double euclidean_distance(const Vector& a, const Vector& b) {
  return euclidean_distance(a.values(), b.values());
}

/**
 * Seeded pseudo-random stream: xoshiro256** state expanded from the seed with
 * splitmix64. Every draw is computed with integer arithmetic or a fixed
 * sequence of libm calls, so a seed reproduces the same sequence everywhere.
 *
 * Streams are single-owner. Parallel or independent work takes a child stream
 * from derive(), which depends only on (seed, index) and never on how many
 * values the parent has already produced.
 */
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] RngStream derive(std::uint64_t index) const;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Fisher-Yates, independent of the standard library's shuffle algorithm.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  std::optional<double> spare_normal_;
};

/// Free-function spelling of RngStream::derive.
inline RngStream rng_derive(const RngStream& parent, std::uint64_t index) {
  return parent.derive(index);
}

}  // namespace reid
