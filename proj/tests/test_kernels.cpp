#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>
#include <random>
#include <vector>

#include "pibgen/kernels.hpp"

using namespace pibgen::kernels;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Vector variants reassociate the sums; allow rounding relative to the
// magnitude of the terms, not of the (possibly cancelling) result.
void close(double got, double want, double magnitude) {
  CHECK(std::abs(got - want) <= 1e-13 * (magnitude + 1.0));
}

}  // namespace

TEST_CASE("scalar table is always available") {
  CHECK(isa_supported(Isa::scalar));
  CHECK(table_for(Isa::scalar) != nullptr);
  CHECK(isa_name(Isa::scalar) == "scalar");
}

TEST_CASE("PIBGEN_SIMD=scalar pins the scalar path") {
  const char* env = std::getenv("PIBGEN_SIMD");
  if (env && std::string(env) == "scalar") CHECK(active_isa() == Isa::scalar);
}

TEST_CASE("every supported variant matches the scalar reference") {
  const Table* ref = table_for(Isa::scalar);
  std::mt19937_64 rng(42);
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    const Table* t = table_for(isa);
    if (!t) continue;
    CAPTURE(isa_name(isa));
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 63u, 64u, 1000u, 1029u}) {
      CAPTURE(n);
      const auto a = random_vector(rng, n, 10.0);
      const auto b = random_vector(rng, n, 10.0);
      const auto w = random_vector(rng, n, 1.0);
      double mag = 0.0, mag_dot = 0.0, mag_w = 0.0, mag_sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        mag += std::abs(a[i]);
        mag_dot += std::abs(a[i] * b[i]);
        mag_w += std::abs(w[i] * a[i] * b[i]);
        mag_sq += (a[i] - 0.3) * (a[i] - 0.3);
      }
      close(t->sum(a.data(), n), ref->sum(a.data(), n), mag);
      close(t->dot(a.data(), b.data(), n), ref->dot(a.data(), b.data(), n), mag_dot);
      close(t->weighted_dot(w.data(), a.data(), b.data(), n),
            ref->weighted_dot(w.data(), a.data(), b.data(), n), mag_w);
      close(t->sum_sq_dev(a.data(), n, 0.3), ref->sum_sq_dev(a.data(), n, 0.3), mag_sq);

      auto y1 = b, y2 = b;
      t->axpy(1.7, a.data(), y1.data(), n);
      ref->axpy(1.7, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) close(y1[i], y2[i], std::abs(1.7 * a[i]) + std::abs(b[i]));
    }
  }
}

TEST_CASE("scalar reference against hand values") {
  const Table* t = table_for(Isa::scalar);
  const double a[] = {1, 2, 3, 4, 5};
  const double b[] = {2, 0, -1, 1, 0.5};
  const double w[] = {1, 1, 2, 0, 2};
  CHECK(t->sum(a, 5) == 15.0);
  CHECK(t->dot(a, b, 5) == 2.0 - 3.0 + 4.0 + 2.5);
  CHECK(t->weighted_dot(w, a, b, 5) == 2.0 - 6.0 + 5.0);
  CHECK(t->sum_sq_dev(a, 5, 3.0) == 10.0);
}

TEST_CASE("dispatch can be pinned and restored") {
  const Isa original = active_isa();
  REQUIRE(set_active_isa(Isa::scalar));
  CHECK(active_isa() == Isa::scalar);
  const std::vector<double> x{0.5, 0.25, 0.125};
  CHECK(sum(x) == 0.875);
  std::vector<double> y{1, 1, 1};
  axpy(2.0, x, y);
  CHECK(y == std::vector<double>{2.0, 1.5, 1.25});
  if (!isa_supported(Isa::neon)) CHECK_FALSE(set_active_isa(Isa::neon));
  CHECK(set_active_isa(original));
  CHECK(active_isa() == original);
}
