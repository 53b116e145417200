#pragma once

// Brute-force verifiers for small binary frames. They enumerate every
// completion of the unobserved potential outcomes (or every corner of the
// unknown-expectation box for BSV) and report the exact extremes, so the
// closed forms in bounds.hpp can be checked against them.

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pibgen/bounds.hpp"
#include "pibgen/frame.hpp"

namespace pibgen::oracle {

/// Exact fraction over int64, always normalized with a positive denominator.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t n) : num_(n) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t n, std::int64_t d);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational operator-() const { return Rational(-num_, den_); }
  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// One unit's potential-outcome pair; nullopt marks a free slot.
struct UnitSlots {
  std::optional<int> y0;
  std::optional<int> y1;
};

struct SumRange {
  std::int64_t min = 0;  // of sum_i (y1_i - y0_i)
  std::int64_t max = 0;
  std::uint64_t completions = 0;  // feasible ones
};

inline constexpr int kMaxFreeSlots = 24;

/// Walks all 2^free completions. With `monotone`, completions with any
/// y1 < y0 are skipped, and a unit observed with y1 < y0 throws
/// ObservedViolation. More than kMaxFreeSlots free slots throws TooLarge.
SumRange enumerate_completions(std::span<const UnitSlots> units, bool monotone);

struct ExactInterval {
  Rational lo;
  Rational hi;
};

/// Design quantities as exact fractions of the frame's counts. A z=0 unit's
/// hypothetical arm is its w label if present, otherwise 0 when it carries an
/// outcome and 1 when it does not. Arm-0 z=0 units must carry an outcome and
/// arm-1 ones must not (BadConfig), so the outcome mean q0 and the mass
/// P(W=0,Z=0) refer to the same units.
struct ExactInputs {
  std::int64_t n_units = 0;
  std::int64_t n_treated = 0;
  std::int64_t n_control = 0;
  std::int64_t n_z0_arm0 = 0;
  Rational p_z1, p_w1_given_z1, p_w0_given_z0;
  Rational e1, e0;
  std::optional<Rational> q0;
  Rational pass1, fail0;
  std::optional<Rational> fail0_z0;
};

/// Requires a binary frame with both sampled arms (NonBinaryOutcome, EmptyArm).
ExactInputs exact_inputs(const StudyFrame& frame);

/// The float-engine design probabilities matching exact_inputs.
DesignProbs oracle_probs(const StudyFrame& frame);

/// Sampled units contribute their identified SATE (n times the difference in
/// arm means); every z=0 slot is free, except that the reduced framework pins
/// y0 of arm-0 z=0 units to their outcome.
ExactInterval enumerate_worst_case(const StudyFrame& frame, Framework framework);

struct ExactMtr {
  ExactInterval min_variant;
  ExactInterval max_variant;
};

/// Per-unit enumeration under y1 >= y0. The sampled unit's unobserved arm is
/// free; z=0 units are fully free (sample scope) or have y0 pinned on arm 0
/// (population scope). The min variant repeats the enumeration with the free
/// z=0 contributions forced to 0.
ExactMtr enumerate_mtr(const StudyFrame& frame, MtrScope scope);

/// Corner sweep over the unknown sample-counterfactual expectations, each in
/// [e - lambda, e + lambda] intersected with [0, 1].
ExactInterval enumerate_bsv(const StudyFrame& frame, Framework framework, Rational lambda);

struct FloatInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Same sweep from plug-in values, for any support.
FloatInterval enumerate_bsv(const EmpiricalRates& rates, const DesignProbs& probs,
                            Framework framework, double lambda, const OutcomeSupport& support);

/// Closed-form entry points under test; swap one out to check that
/// verify_frame notices.
struct Engine {
  std::function<PateInterval(const EmpiricalRates&, const DesignProbs&, Framework,
                             const OutcomeSupport&)>
      worst_case;
  std::function<PateInterval(const EmpiricalRates&, const DesignProbs&, Framework, double,
                             const OutcomeSupport&)>
      bsv;
  std::function<MtrResult(const EmpiricalRates&, const DesignProbs&, MtrScope)> mtr;
};

Engine default_engine();

struct Check {
  std::string name;
  double oracle_lo = 0.0;
  double oracle_hi = 0.0;
  double engine_lo = 0.0;
  double engine_hi = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<Check> checks;
  std::vector<std::string> skipped;
  bool pass() const;
};

/// The default lambda grid: 0, 1/10, 1/4, 1/2, 1.
std::vector<Rational> default_lambdas();

/// Runs every oracle against the engine on one frame. Reduced-framework and
/// population-scope checks are skipped (and listed) when no z=0 unit carries
/// an outcome.
VerifyReport verify_frame(const StudyFrame& frame, std::span<const Rational> lambdas,
                          const Engine& engine = default_engine(), double tolerance = 1e-12);

/// A binary frame of 2..max_units units with both sampled arms. z=0 units
/// get a random hypothetical arm; arm-0 ones carry an outcome when
/// `population_outcomes` is set (otherwise no z=0 unit is labeled). Draws use
/// raw generator output only, so a seed gives the same frame everywhere.
StudyFrame random_frame(std::mt19937_64& rng, int max_units = 10, bool population_outcomes = true);

/// One line per unit, for counterexample dumps.
std::string describe_frame(const StudyFrame& frame);

}  // namespace pibgen::oracle
