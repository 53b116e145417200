#pragma once

// Point estimates of the PATE that assume ignorable sample selection. They
// sit beside the intervals for comparison; none of them is a bound.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pibgen/frame.hpp"
#include "pibgen/propensity.hpp"
#include "pibgen/stratify.hpp"

namespace pibgen {

enum class PointMethod { naive, ipw, subclassification };

std::string_view to_string(PointMethod m);

struct PointEstimate {
  PointMethod method = PointMethod::naive;
  double estimate = 0.0;
  double se = 0.0;
  std::vector<std::pair<std::string, double>> details;
};

/// Difference of sampled arm means; SE = sqrt(v1/n1 + v0/n0) with plug-in
/// (denominator-n) arm variances, i.e. p(1-p) for binary outcomes.
PointEstimate naive_sate(const StudyFrame& frame);

struct BootstrapOptions {
  int reps = 1000;
  std::uint64_t seed = 1;
  /// Replicates are split across this many threads; results do not depend on it.
  int threads = 1;
};

/// Normalized (Hajek) inverse-propensity estimate: within each arm, sampled
/// units get weight 1/s(X) and the arm mean is divided by the arm's weight
/// sum. SE from a bootstrap that resamples sampled units within arms, holding
/// the fitted weights fixed. Replicate r draws from a generator seeded with
/// derive_seed(seed, r).
///
/// Errors: UnfittedModel (model not converged), ZeroPropensity, EmptyArm.
PointEstimate ipw_estimate(const StudyFrame& frame, const PropensityModel& model,
                           const BootstrapOptions& options = {});

/// sum_j (N_j/N) tau_j over strata, tau_j the naive contrast within stratum
/// j; SE = sqrt(sum_j (N_j/N)^2 SE_j^2). Throws NonViableStratum naming the
/// offending strata.
PointEstimate subclass_estimate(const StudyFrame& frame, const StratumAssignment& assignment);

/// splitmix64 of master + index; the per-replicate seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// "0.048 (0.038)"
std::string format_estimate(const PointEstimate& e, int decimals = 3);

}  // namespace pibgen
