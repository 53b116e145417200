#include "pibgen/stratify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "pibgen/error.hpp"

namespace pibgen {

namespace {

// Assigns units given cut points and recomputes population counts + ranges.
StratumAssignment assign(std::span<const double> logits, std::vector<double> breakpoints) {
  StratumAssignment a;
  a.k = static_cast<int>(breakpoints.size()) + 1;
  a.breakpoints = std::move(breakpoints);
  a.stratum_of.resize(logits.size());
  a.counts.assign(static_cast<std::size_t>(a.k), {});
  for (std::size_t i = 0; i < logits.size(); ++i) {
    // First cut >= logit: values equal to a cut land below it.
    const auto it = std::lower_bound(a.breakpoints.begin(), a.breakpoints.end(), logits[i]);
    const int s = static_cast<int>(it - a.breakpoints.begin());
    a.stratum_of[i] = s;
    ++a.counts[static_cast<std::size_t>(s)].population;
  }
  const auto [mn, mx] = std::minmax_element(logits.begin(), logits.end());
  const double lo = logits.empty() ? NAN : *mn;
  const double hi = logits.empty() ? NAN : *mx;
  for (int j = 0; j < a.k; ++j) {
    const double cut_lo = j == 0 ? lo : a.breakpoints[static_cast<std::size_t>(j) - 1];
    const double cut_hi = j == a.k - 1 ? hi : a.breakpoints[static_cast<std::size_t>(j)];
    a.logit_range.emplace_back(cut_lo, cut_hi);
  }
  return a;
}

void fill_sample_counts(const StudyFrame& frame, StratumAssignment& a) {
  for (auto& c : a.counts) c.sample_treated = c.sample_control = 0;
  const auto& units = frame.units();
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i].z != 1) continue;
    auto& c = a.counts[static_cast<std::size_t>(a.stratum_of[i])];
    if (*units[i].w == 1) {
      ++c.sample_treated;
    } else {
      ++c.sample_control;
    }
  }
}

}  // namespace

StratumAssignment make_strata(std::span<const double> logits, int k) {
  if (k < 1) throw Error(ErrorKind::BadConfig, "stratum count must be at least 1");
  std::vector<double> sorted(logits.begin(), logits.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct =
      static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  if (static_cast<std::size_t>(k) > distinct) {
    throw Error(ErrorKind::TooManyStrata, std::to_string(k) + " strata requested but only " +
                                              std::to_string(distinct) + " distinct logits");
  }
  sorted.assign(logits.begin(), logits.end());
  std::sort(sorted.begin(), sorted.end());

  const std::size_t n = sorted.size();
  const auto kk = static_cast<std::size_t>(k);
  std::vector<double> cuts;
  for (std::size_t j = 1; j < kk; ++j) {
    const std::size_t rank = (j * n + kk - 1) / kk;  // ceil(j n / k), 1-based
    cuts.push_back(sorted[rank - 1]);
  }
  return assign(logits, std::move(cuts));
}

StratumAssignment make_strata(const StudyFrame& frame, std::span<const double> logits, int k) {
  if (logits.size() != frame.size()) {
    throw Error(ErrorKind::BadConfig, "one logit per unit is required");
  }
  auto a = make_strata(logits, k);
  fill_sample_counts(frame, a);
  return a;
}

StratumFrames stratum_frames(const StudyFrame& frame, const StratumAssignment& assignment) {
  std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(assignment.k));
  for (std::size_t i = 0; i < frame.size(); ++i) {
    rows[static_cast<std::size_t>(assignment.stratum_of.at(i))].push_back(i);
  }
  StratumFrames out;
  for (const auto& r : rows) {
    out.frames.push_back(frame.subset(r));
    std::size_t treated = 0, control = 0;
    for (const auto& u : out.frames.back().units()) {
      if (u.z != 1) continue;
      (*u.w == 1 ? treated : control) += 1;
    }
    out.viable.push_back(treated > 0 && control > 0);
  }
  return out;
}

StratumAssignment merge_nonviable(const StudyFrame& frame, const StratumAssignment& assignment,
                                  std::vector<std::string>& notes) {
  StratumAssignment current = assignment;
  for (;;) {
    if (current.k == 1) break;
    int bad = -1;
    for (int j = 0; j < current.k; ++j) {
      if (!current.counts[static_cast<std::size_t>(j)].viable()) {
        bad = j;
        break;
      }
    }
    if (bad < 0) break;
    std::vector<double> cuts = current.breakpoints;
    const int into = bad == current.k - 1 ? bad - 1 : bad + 1;
    // Removing the cut between `bad` and its neighbour merges them.
    const int cut = std::min(bad, into);
    cuts.erase(cuts.begin() + cut);
    notes.push_back("merged non-viable stratum " + std::to_string(bad + 1) + " into stratum " +
                    std::to_string(into + 1));

    for (int& s : current.stratum_of) {
      if (s > cut) --s;
    }
    current.k -= 1;
    current.breakpoints = std::move(cuts);
    auto& range = current.logit_range;
    range[static_cast<std::size_t>(cut)].second = range[static_cast<std::size_t>(cut) + 1].second;
    range.erase(range.begin() + cut + 1);
    current.counts.assign(static_cast<std::size_t>(current.k), {});
    for (int s : current.stratum_of) ++current.counts[static_cast<std::size_t>(s)].population;
    fill_sample_counts(frame, current);
  }
  return current;
}

void write_stratum_summary(std::ostream& out, const StratumAssignment& a) {
  out << "stratum,logit_lo,logit_hi,n_population,n_treated,n_control,viable\n";
  const auto flags = out.flags();
  out << std::setprecision(17);
  for (int j = 0; j < a.k; ++j) {
    const auto& c = a.counts[static_cast<std::size_t>(j)];
    const auto& [lo, hi] = a.logit_range[static_cast<std::size_t>(j)];
    out << j + 1 << ',' << lo << ',' << hi << ',' << c.population << ',' << c.sample_treated << ','
        << c.sample_control << ',' << (c.viable() ? "true" : "false") << '\n';
  }
  out.flags(flags);
}

}  // namespace pibgen
