#pragma once

// Interval estimates of the population average treatment effect (PATE) for a
// randomized experiment whose sample self-selected from a finite population.
//
// Every bound is built from the same decomposition. Under treatment
// randomization the sampled units identify E(Y(w)) among Z=1 through the arm
// means, so
//
//   E(Y(w)) = E(Y(w)|W=w,Z=1) P(Z=1) + [Z=0 counterfactual mass],
//
// and the assumptions differ only in what they say about the Z=0 part:
//
//   worst case  the Z=0 expectations lie anywhere in the outcome support;
//   bsv(lambda) they lie within lambda of the matching sample arm mean;
//   mtr         every unit satisfies Y(1) >= Y(0) (binary outcomes).
//
// The full framework treats the whole Z=0 mass as unknown. The reduced
// framework takes E(Y(0)|W=0,Z=0) from the population frame's
// business-as-usual outcomes, which pins the mass p = P(W=0|Z=0) P(Z=0).
// PATE bounds are E^L(Y(1)) - E^U(Y(0)) and E^U(Y(1)) - E^L(Y(0)).

#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pibgen/frame.hpp"
#include "pibgen/stratify.hpp"

namespace pibgen {

enum class Assumption { worst_case, bsv, mtr };
enum class Framework { full, reduced };
enum class MtrScope { sample, population };
enum class MtrVariant { min, max };

std::string_view to_string(Assumption a);
std::string_view to_string(Framework f);
std::string_view to_string(MtrScope s);
std::string_view to_string(MtrVariant v);

struct PateInterval {
  double lo = 0.0;
  double hi = 0.0;
  /// Raw closed-form values before any truncation.
  double pre_clamp_lo = 0.0;
  double pre_clamp_hi = 0.0;
  bool clamped_lo = false;
  bool clamped_hi = false;

  Assumption assumption = Assumption::worst_case;
  Framework framework = Framework::full;
  std::optional<double> lambda;
  std::optional<MtrVariant> variant;

  EmpiricalRates rates;
  DesignProbs probs;

  double width() const { return hi - lo; }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains(const PateInterval& other) const { return lo <= other.lo && other.hi <= hi; }
  bool is_point() const { return lo == hi; }
};

struct MtrResult {
  /// Upper bound uses the smallest feasible PATE^U (unknown Z=0 treated
  /// outcomes set to the support minimum): the "best case" reporting bound.
  PateInterval min_variant;
  /// Upper bound uses the largest feasible PATE^U: the sharp MTR bound.
  PateInterval max_variant;
  MtrScope scope = MtrScope::sample;
};

/// Worst-case (no-assumption) bounds. The reduced framework requires
/// rates.e_y0_w0z0 (MissingPopulationOutcome otherwise).
PateInterval worst_case_bounds(const EmpiricalRates& rates, const DesignProbs& probs,
                               Framework framework, const OutcomeSupport& support);

struct BsvOptions {
  /// Alternative reduced-framework variant (flag --r-code-compat),
  /// which weights the lambda-adjusted control term by P(W=0|Z=0) P(Z=0)
  /// rather than by the remaining mass 1 - P(Z=1) - P(W=0,Z=0).
  bool r_code_compat = false;
};

/// Bounded-sample-variation bounds. `pre_clamp_*` hold the closed form with
/// every unknown Z=0 expectation at (arm mean -/+ lambda); `lo`/`hi`
/// additionally intersect each of those expectations with the outcome
/// support, which is the sharp interval and never leaves
/// [y_lo - y_hi, y_hi - y_lo]. Throws NegativeLambda,
/// MissingPopulationOutcome.
PateInterval bsv_bounds(const EmpiricalRates& rates, const DesignProbs& probs,
                        Framework framework, double lambda, const OutcomeSupport& support,
                        const BsvOptions& options = {});

/// True iff d + 2 lambda < y_hi - y_lo and d - 2 lambda > y_lo - y_hi, where d
/// is the difference of the sample arm means: the condition under which the
/// bsv interval is sharp and narrower than the worst case.
bool bsv_improves(const EmpiricalRates& rates, double lambda, const OutcomeSupport& support);

/// Monotone treatment response bounds for binary outcomes. Throws
/// NonBinaryOutcome, MissingPopulationOutcome (population scope without
/// fail0_w0z0).
MtrResult mtr_bounds(const EmpiricalRates& rates, const DesignProbs& probs, MtrScope scope);
MtrResult mtr_bounds(const StudyFrame& frame, const DesignProbs& probs, MtrScope scope);

struct BoundsRequest {
  Assumption assumption = Assumption::worst_case;
  /// For mtr: full = sample scope, reduced = population scope.
  Framework framework = Framework::full;
  double lambda = 0.0;
  /// Inherited by every stratum.
  double assumed_p_w0_given_z0 = 0.5;
  BsvOptions bsv;
  /// N_j/N weighted sum of the stratum intervals. Not part of the per-stratum
  /// method; reported only when every stratum produced an interval.
  bool pooled = false;
};

struct StratumBounds {
  int stratum = 0;  // 0-based
  bool viable = false;
  std::size_t population = 0;
  std::optional<PateInterval> interval;  // worst_case / bsv
  std::optional<MtrResult> mtr;          // mtr
  /// Why the stratum has no result (NonViableStratum, MissingPopulationOutcome...).
  std::optional<std::string> skipped;
};

struct StratifiedBounds {
  std::vector<StratumBounds> strata;
  std::optional<PateInterval> pooled;
  /// For mtr the pooled interval uses the min variant; this carries the max.
  std::optional<PateInterval> pooled_mtr_max;
};

/// Bounds per stratum from each stratum's own rates and P(Z=1).
StratifiedBounds stratified_bounds(const StudyFrame& frame, const StratumAssignment& assignment,
                                   const BoundsRequest& request);

/// BoundsResult JSON: assumption, framework, lambda?, variant?, lo, hi,
/// clamped {lo, hi}, pre_clamp {lo, hi}, inputs {...}.
nlohmann::ordered_json to_json(const PateInterval& interval);

}  // namespace pibgen
