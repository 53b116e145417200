#pragma once

// Data-parallel inner loops shared by the propensity fit and the balance
// statistics. Every kernel has a scalar reference implementation and, where
// the target supports it, a vectorized variant; the public entry points
// dispatch to the variant chosen at startup.
//
// Selection: the widest supported ISA, unless the PIBGEN_SIMD environment
// variable names another one ("scalar", "avx2", "neon"). Reductions in the
// vector variants use a different summation order than the scalar loops, so
// results agree to rounding, not bit for bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace pibgen::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;
bool isa_supported(Isa isa) noexcept;
Isa active_isa() noexcept;
/// Forces a variant; returns false (and changes nothing) if unsupported.
bool set_active_isa(Isa isa) noexcept;

double sum(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
/// sum_i w_i * a_i * b_i
double weighted_dot(std::span<const double> w, std::span<const double> a,
                    std::span<const double> b);
/// sum_i (x_i - center)^2
double sum_sq_dev(std::span<const double> x, double center);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

struct Table {
  double (*sum)(const double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*weighted_dot)(const double*, const double*, const double*, std::size_t);
  double (*sum_sq_dev)(const double*, std::size_t, double);
  void (*axpy)(double, const double*, double*, std::size_t);
};

/// Per-ISA tables for equivalence testing. Returns nullptr when the variant
/// is not compiled in or not supported by this CPU.
const Table* table_for(Isa isa) noexcept;

}  // namespace pibgen::kernels
