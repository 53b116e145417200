#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace pibgen::kernels {

namespace detail {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_dot_scalar(const double* w, const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

double sum_sq_dev_scalar(const double* x, std::size_t n, double c) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - c;
    s += d * d;
  }
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const Table scalar_table = {sum_scalar, dot_scalar, weighted_dot_scalar, sum_sq_dev_scalar,
                            axpy_scalar};

}  // namespace detail

namespace {

bool cpu_has(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(PIBGEN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(PIBGEN_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa widest() noexcept {
  if (cpu_has(Isa::avx2)) return Isa::avx2;
  if (cpu_has(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("PIBGEN_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == isa_name(isa) && cpu_has(isa)) return isa;
    }
  }
  return widest();
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

const Table& active_table() noexcept { return *table_for(current().load(std::memory_order_relaxed)); }

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "scalar";
}

bool isa_supported(Isa isa) noexcept { return cpu_has(isa); }

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

bool set_active_isa(Isa isa) noexcept {
  if (!cpu_has(isa)) return false;
  current().store(isa, std::memory_order_relaxed);
  return true;
}

const Table* table_for(Isa isa) noexcept {
  if (!cpu_has(isa)) return nullptr;
  switch (isa) {
    case Isa::scalar:
      return &detail::scalar_table;
    case Isa::avx2:
#if defined(PIBGEN_HAVE_AVX2)
      return &detail::avx2_table;
#else
      return nullptr;
#endif
    case Isa::neon:
#if defined(PIBGEN_HAVE_NEON)
      return &detail::neon_table;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

double sum(std::span<const double> x) { return active_table().sum(x.data(), x.size()); }

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active_table().dot(a.data(), b.data(), a.size());
}

double weighted_dot(std::span<const double> w, std::span<const double> a,
                    std::span<const double> b) {
  assert(w.size() == a.size() && a.size() == b.size());
  return active_table().weighted_dot(w.data(), a.data(), b.data(), a.size());
}

double sum_sq_dev(std::span<const double> x, double center) {
  return active_table().sum_sq_dev(x.data(), x.size(), center);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active_table().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace pibgen::kernels
