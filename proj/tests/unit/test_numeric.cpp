#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reid/error.hpp"
#include "reid/numeric.hpp"
#include "../support/oracles.hpp"

using namespace reid;

namespace {

Vector random_vector(std::size_t dim, RngStream& rng) {
  Vector v(dim);
  for (double& x : v.values()) x = rng.uniform(-2.0, 2.0);
  return v;
}

}  // namespace

TEST_CASE("euclidean distance known values") {
  const Vector a{0.0, 0.0};
  const Vector b{3.0, 4.0};
  CHECK(euclidean_distance(a, b) == 5.0);
  CHECK(squared_distance(a, b) == 25.0);
  CHECK(euclidean_distance(b, b) == 0.0);
  const Vector c{1.5, -2.0, 0.25, 7.0};
  CHECK(euclidean_distance(c, c) == 0.0);
}

TEST_CASE("distances agree with a scalar loop") {
  RngStream rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector a = random_vector(8, rng);
    const Vector b = random_vector(8, rng);
    CHECK(std::abs(euclidean_distance(a, b) - oracle::dist(a.storage(), b.storage())) < 1e-12);
    CHECK(std::abs(squared_distance(a, b) - oracle::sq_dist(a.storage(), b.storage())) < 1e-12);
    double d = 0.0;
    for (std::size_t i = 0; i < 8; ++i) d += a[i] * b[i];
    CHECK(std::abs(dot(a.values(), b.values()) - d) < 1e-12);
  }
}

TEST_CASE("distance axioms on random triples") {
  RngStream rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 1 + rng.uniform_index(10);
    const Vector a = random_vector(dim, rng);
    const Vector b = random_vector(dim, rng);
    const Vector c = random_vector(dim, rng);
    CHECK(euclidean_distance(a, b) >= 0.0);
    CHECK(euclidean_distance(a, b) == doctest::Approx(euclidean_distance(b, a)).epsilon(1e-12));
    CHECK(euclidean_distance(a, c) <= euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-9);
  }
}

TEST_CASE("dimension mismatch throws") {
  const Vector a{1.0, 2.0};
  const Vector b{1.0, 2.0, 3.0};
  CHECK_THROWS_AS((void)euclidean_distance(a, b), DimensionError);
  CHECK_THROWS_AS((void)dot(a.values(), b.values()), DimensionError);
  Vector c = a;
  CHECK_THROWS_AS(c += b, DimensionError);
}

TEST_CASE("matrix products against loops") {
  RngStream rng(5);
  Matrix m(3, 4);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  const Vector x = random_vector(4, rng);
  const Vector y = random_vector(3, rng);
  const Vector mx = m.multiply(x);
  const Vector mty = m.multiply_transposed(y);
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 4; ++c) s += m(r, c) * x[c];
    CHECK(std::abs(mx[r] - s) < 1e-12);
  }
  for (std::size_t c = 0; c < 4; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < 3; ++r) s += m(r, c) * y[r];
    CHECK(std::abs(mty[c] - s) < 1e-12);
  }
  CHECK_THROWS_AS((void)m.multiply(y), DimensionError);
  CHECK(Matrix::identity(4).multiply(x) == x);
}

TEST_CASE("non-finite entries are rejected") {
  Vector v{1.0, NAN};
  CHECK_FALSE(v.all_finite());
  CHECK_THROWS_AS(Matrix(1, 2, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("rng streams are deterministic and derived streams differ") {
  const RngStream root(42);
  RngStream a = root.derive(0);
  RngStream b = root.derive(0);
  RngStream c = root.derive(1);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RngStream a2 = root.derive(0);
  CHECK(a2.next_u64() != c.next_u64());
  CHECK(rng_derive(root, 7).seed() == root.derive(7).seed());

  RngStream u = RngStream(1).derive(5);
  for (int i = 0; i < 4; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("a parent stream and its children are distinct") {
  RngStream a(0);
  RngStream b(0);
  const std::uint64_t first = a.next_u64();
  CHECK(first == b.next_u64());
  CHECK(first != 0);
  CHECK(RngStream(0).derive(0).next_u64() != RngStream(0).next_u64());
}

TEST_CASE("uniform_index is in range and roughly uniform") {
  RngStream rng(9);
  const std::size_t n = 7;
  std::vector<std::size_t> counts(n, 0);
  const std::size_t draws = 70000;
  for (std::size_t i = 0; i < draws; ++i) {
    const std::size_t k = rng.uniform_index(n);
    REQUIRE(k < n);
    ++counts[k];
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(draws) / static_cast<double>(n);
  for (std::size_t c : counts) chi2 += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  // 6 degrees of freedom; 0.999 quantile is about 22.5.
  CHECK(chi2 < 22.5);
  CHECK_THROWS((void)rng.uniform_index(0));
}

TEST_CASE("normal draws have unit moments") {
  RngStream rng(17);
  const int n = 200000;
  double sum = 0.0;
  double sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("shuffle yields a permutation and every position is reachable") {
  RngStream rng(23);
  std::vector<int> base(6);
  std::iota(base.begin(), base.end(), 0);
  std::vector<std::vector<int>> seen_at(6, std::vector<int>(6, 0));
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<int> v = base;
    rng.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(sorted == base);
    for (int i = 0; i < 6; ++i) ++seen_at[static_cast<std::size_t>(v[static_cast<std::size_t>(i)])][static_cast<std::size_t>(i)];
  }
  for (const auto& row : seen_at) {
    for (int count : row) CHECK(count > 350);
  }
}
