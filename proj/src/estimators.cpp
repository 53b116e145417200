#include "pibgen/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <thread>

#include "pibgen/error.hpp"

namespace pibgen {

std::string_view to_string(PointMethod m) {
  switch (m) {
    case PointMethod::naive: return "naive";
    case PointMethod::ipw: return "ipw";
    case PointMethod::subclassification: return "subclassification";
  }
  return "naive";
}

namespace {

struct ArmMoments {
  double mean = 0.0;
  double variance = 0.0;  // denominator n
  std::size_t n = 0;
};

ArmMoments arm_moments(const StudyFrame& frame, int arm) {
  ArmMoments m;
  double sum = 0.0;
  for (const auto& u : frame.units()) {
    if (u.z == 1 && *u.w == arm) {
      sum += *u.y;
      ++m.n;
    }
  }
  if (m.n == 0) {
    throw Error(ErrorKind::EmptyArm,
                std::string("no sampled ") + (arm == 1 ? "treated" : "control") + " units");
  }
  m.mean = sum / static_cast<double>(m.n);
  double ss = 0.0;
  for (const auto& u : frame.units()) {
    if (u.z == 1 && *u.w == arm) ss += (*u.y - m.mean) * (*u.y - m.mean);
  }
  m.variance = ss / static_cast<double>(m.n);
  return m;
}

// Unbiased draw from [0, n) that does not depend on the standard library's
// distribution implementation.
std::size_t draw_index(std::mt19937_64& gen, std::size_t n) {
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t r;
  do {
    r = gen();
  } while (r >= limit);
  return static_cast<std::size_t>(r % range);
}

struct WeightedArm {
  std::vector<double> y;
  std::vector<double> w;
};

double hajek_mean(const WeightedArm& arm) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < arm.y.size(); ++i) {
    num += arm.w[i] * arm.y[i];
    den += arm.w[i];
  }
  return num / den;
}

double resampled_hajek(const WeightedArm& arm, std::mt19937_64& gen) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < arm.y.size(); ++i) {
    const std::size_t k = draw_index(gen, arm.y.size());
    num += arm.w[k] * arm.y[k];
    den += arm.w[k];
  }
  return num / den;
}

double effective_size(const WeightedArm& arm) {
  double s = 0.0, s2 = 0.0;
  for (double w : arm.w) {
    s += w;
    s2 += w * w;
  }
  return s * s / s2;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

PointEstimate naive_sate(const StudyFrame& frame) {
  const ArmMoments t = arm_moments(frame, 1);
  const ArmMoments c = arm_moments(frame, 0);
  PointEstimate e;
  e.method = PointMethod::naive;
  e.estimate = t.mean - c.mean;
  e.se = std::sqrt(t.variance / static_cast<double>(t.n) + c.variance / static_cast<double>(c.n));
  e.details = {{"n_treated", static_cast<double>(t.n)},
               {"n_control", static_cast<double>(c.n)},
               {"mean_treated", t.mean},
               {"mean_control", c.mean}};
  return e;
}

PointEstimate ipw_estimate(const StudyFrame& frame, const PropensityModel& model,
                           const BootstrapOptions& options) {
  if (!model.converged) throw Error(ErrorKind::UnfittedModel, "propensity model has not converged");
  if (options.reps < 2) throw Error(ErrorKind::BadConfig, "bootstrap needs at least 2 replicates");
  const auto scores = propensity_scores(model, frame);

  WeightedArm treated, control;
  const auto& units = frame.units();
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i].z != 1) continue;
    if (!(scores[i] > 0.0)) {
      throw Error(ErrorKind::ZeroPropensity, "sampled unit '" + units[i].id + "' has s(X) = 0");
    }
    auto& arm = *units[i].w == 1 ? treated : control;
    arm.y.push_back(*units[i].y);
    arm.w.push_back(1.0 / scores[i]);
  }
  if (treated.y.empty()) throw Error(ErrorKind::EmptyArm, "no sampled treated units");
  if (control.y.empty()) throw Error(ErrorKind::EmptyArm, "no sampled control units");

  PointEstimate e;
  e.method = PointMethod::ipw;
  e.estimate = hajek_mean(treated) - hajek_mean(control);

  const auto reps = static_cast<std::size_t>(options.reps);
  std::vector<double> draws(reps);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      std::mt19937_64 gen(derive_seed(options.seed, r));
      const double t = resampled_hajek(treated, gen);
      const double c = resampled_hajek(control, gen);
      draws[r] = t - c;
    }
  };
  const auto threads = static_cast<std::size_t>(std::clamp(options.threads, 1, 256));
  if (threads == 1) {
    run(0, reps);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (reps + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(reps, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  double mean = 0.0;
  for (double d : draws) mean += d;
  mean /= static_cast<double>(reps);
  double ss = 0.0;
  for (double d : draws) ss += (d - mean) * (d - mean);
  e.se = std::sqrt(ss / static_cast<double>(reps - 1));

  double max_w = 0.0;
  for (const auto* arm : {&treated, &control}) {
    for (double w : arm->w) max_w = std::max(max_w, w);
  }
  e.details = {{"ess_treated", effective_size(treated)},
               {"ess_control", effective_size(control)},
               {"max_weight", max_w},
               {"bootstrap_reps", static_cast<double>(reps)}};
  return e;
}

PointEstimate subclass_estimate(const StudyFrame& frame, const StratumAssignment& assignment) {
  const auto slices = stratum_frames(frame, assignment);
  std::string bad;
  for (std::size_t j = 0; j < slices.viable.size(); ++j) {
    if (!slices.viable[j]) bad += (bad.empty() ? "" : ", ") + std::to_string(j + 1);
  }
  if (!bad.empty()) {
    throw Error(ErrorKind::NonViableStratum,
                "strata without both sampled arms: " + bad + " (consider merging strata)");
  }
  PointEstimate e;
  e.method = PointMethod::subclassification;
  const double n = static_cast<double>(frame.size());
  double var = 0.0;
  for (std::size_t j = 0; j < slices.frames.size(); ++j) {
    const auto local = naive_sate(slices.frames[j]);
    const double w = static_cast<double>(slices.frames[j].size()) / n;
    e.estimate += w * local.estimate;
    var += w * w * local.se * local.se;
    e.details.emplace_back("tau_" + std::to_string(j + 1), local.estimate);
    e.details.emplace_back("weight_" + std::to_string(j + 1), w);
  }
  e.se = std::sqrt(var);
  return e;
}

std::string format_estimate(const PointEstimate& e, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f (%.*f)", decimals, e.estimate, decimals, e.se);
  return buf;
}

}  // namespace pibgen
