#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pibgen/frame.hpp"

namespace pibgen {

struct StratumCounts {
  std::size_t population = 0;
  std::size_t sample_treated = 0;
  std::size_t sample_control = 0;

  bool viable() const { return sample_treated > 0 && sample_control > 0; }
};

/// Partition of the population into k logit strata. Stratum indices are
/// 0-based internally and printed 1-based.
struct StratumAssignment {
  int k = 1;
  /// k-1 ascending cut points; stratum j holds logits in
  /// (breakpoints[j-1], breakpoints[j]], the lowest stratum closed below.
  std::vector<double> breakpoints;
  /// Stratum per unit, in frame row order.
  std::vector<int> stratum_of;
  std::vector<StratumCounts> counts;
  /// (lower cut, upper cut] per stratum; the outer strata use the smallest
  /// and largest logit overall.
  std::vector<std::pair<double, double>> logit_range;
};

/// Cuts at the j/k empirical quantiles (inverse-ECDF: the ceil(jN/k)-th
/// smallest logit) over all N units. Ties at a cut go to the lower stratum.
/// Throws TooManyStrata when k exceeds the number of distinct logits.
/// Sample counts stay zero; use the frame overload to fill them.
StratumAssignment make_strata(std::span<const double> logits, int k);
StratumAssignment make_strata(const StudyFrame& frame, std::span<const double> logits, int k);

struct StratumFrames {
  std::vector<StudyFrame> frames;
  std::vector<bool> viable;
};

StratumFrames stratum_frames(const StudyFrame& frame, const StratumAssignment& assignment);

/// Folds every non-viable stratum into its upper neighbour (the top stratum
/// into its lower one) until all remaining strata are viable or one is left.
/// Appends a human-readable note per merge to `notes`.
StratumAssignment merge_nonviable(const StudyFrame& frame, const StratumAssignment& assignment,
                                  std::vector<std::string>& notes);

/// CSV: stratum,logit_lo,logit_hi,n_population,n_treated,n_control,viable
void write_stratum_summary(std::ostream& out, const StratumAssignment& assignment);

}  // namespace pibgen
