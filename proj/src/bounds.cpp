#include "pibgen/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "pibgen/error.hpp"

namespace pibgen {

std::string_view to_string(Assumption a) {
  switch (a) {
    case Assumption::worst_case: return "worst_case";
    case Assumption::bsv: return "bsv";
    case Assumption::mtr: return "mtr";
  }
  return "worst_case";
}

std::string_view to_string(Framework f) { return f == Framework::full ? "full" : "reduced"; }
std::string_view to_string(MtrScope s) { return s == MtrScope::sample ? "sample" : "population"; }
std::string_view to_string(MtrVariant v) { return v == MtrVariant::min ? "min" : "max"; }

namespace {

// Bounds on E(Y(1)) and E(Y(0)) before differencing.
struct PotentialOutcomeBounds {
  double y1_lo, y1_hi, y0_lo, y0_hi;
};

PateInterval finish(const PotentialOutcomeBounds& raw, const PotentialOutcomeBounds& sharp,
                    const OutcomeSupport& support, PateInterval out) {
  const double limit = support.range();
  out.pre_clamp_lo = raw.y1_lo - raw.y0_hi;
  out.pre_clamp_hi = raw.y1_hi - raw.y0_lo;
  out.lo = std::clamp(sharp.y1_lo - sharp.y0_hi, -limit, limit);
  out.hi = std::clamp(sharp.y1_hi - sharp.y0_lo, -limit, limit);
  out.clamped_lo = out.lo != out.pre_clamp_lo;
  out.clamped_hi = out.hi != out.pre_clamp_hi;
  return out;
}

void require_population_outcome(const EmpiricalRates& rates) {
  if (!rates.e_y0_w0z0) {
    throw Error(ErrorKind::MissingPopulationOutcome,
                "reduced framework needs business-as-usual outcomes for z=0 units");
  }
}

}  // namespace

PateInterval worst_case_bounds(const EmpiricalRates& rates, const DesignProbs& probs,
                               Framework framework, const OutcomeSupport& support) {
  const double p1 = probs.p_z1;
  const double p0 = probs.p_z0();

  PotentialOutcomeBounds b{};
  b.y1_lo = rates.e_y1_w1z1 * p1 + support.lo * p0;
  b.y1_hi = rates.e_y1_w1z1 * p1 + support.hi * p0;
  if (framework == Framework::full) {
    b.y0_lo = rates.e_y0_w0z1 * p1 + support.lo * p0;
    b.y0_hi = rates.e_y0_w0z1 * p1 + support.hi * p0;
  } else {
    require_population_outcome(rates);
    const double identified = rates.e_y0_w0z1 * p1 + *rates.e_y0_w0z0 * probs.p_w0_z0();
    const double unknown = probs.p_w1_z0();  // 1 - P(Z=1) - P(W=0,Z=0)
    b.y0_lo = identified + support.lo * unknown;
    b.y0_hi = identified + support.hi * unknown;
  }

  PateInterval out;
  out.assumption = Assumption::worst_case;
  out.framework = framework;
  out.rates = rates;
  out.probs = probs;
  return finish(b, b, support, out);
}

PateInterval bsv_bounds(const EmpiricalRates& rates, const DesignProbs& probs,
                        Framework framework, double lambda, const OutcomeSupport& support,
                        const BsvOptions& options) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::NegativeLambda, "lambda must be a finite value >= 0");
  }
  const double p1 = probs.p_z1;
  const double p0 = probs.p_z0();
  const double e1 = rates.e_y1_w1z1;
  const double e0 = rates.e_y0_w0z1;
  auto lower = [&](double e) { return std::max(e - lambda, support.lo); };
  auto upper = [&](double e) { return std::min(e + lambda, support.hi); };

  PotentialOutcomeBounds raw{}, sharp{};
  raw.y1_lo = e1 * p1 + (e1 - lambda) * p0;
  raw.y1_hi = e1 * p1 + (e1 + lambda) * p0;
  sharp.y1_lo = e1 * p1 + lower(e1) * p0;
  sharp.y1_hi = e1 * p1 + upper(e1) * p0;
  if (framework == Framework::full) {
    raw.y0_lo = e0 * p1 + (e0 - lambda) * p0;
    raw.y0_hi = e0 * p1 + (e0 + lambda) * p0;
    sharp.y0_lo = e0 * p1 + lower(e0) * p0;
    sharp.y0_hi = e0 * p1 + upper(e0) * p0;
  } else {
    require_population_outcome(rates);
    const double identified = e0 * p1 + *rates.e_y0_w0z0 * probs.p_w0_z0();
    const double mass = options.r_code_compat ? probs.p_w0_z0() : probs.p_w1_z0();
    raw.y0_lo = identified + (e0 - lambda) * mass;
    raw.y0_hi = identified + (e0 + lambda) * mass;
    sharp.y0_lo = identified + lower(e0) * mass;
    sharp.y0_hi = identified + upper(e0) * mass;
  }

  PateInterval out;
  out.assumption = Assumption::bsv;
  out.framework = framework;
  out.lambda = lambda;
  out.rates = rates;
  out.probs = probs;
  return finish(raw, sharp, support, out);
}

bool bsv_improves(const EmpiricalRates& rates, double lambda, const OutcomeSupport& support) {
  const double d = rates.difference();
  return d + 2.0 * lambda < support.hi - support.lo && d - 2.0 * lambda > support.lo - support.hi;
}

MtrResult mtr_bounds(const EmpiricalRates& rates, const DesignProbs& probs, MtrScope scope) {
  if (!rates.binary()) {
    throw Error(ErrorKind::NonBinaryOutcome, "monotone treatment response bounds need binary outcomes");
  }
  // P(Y=0|W=0,Z=1) P(W=0,Z=1) + P(Y=1|W=1,Z=1) P(W=1,Z=1)
  const double sample_part = *rates.fail0_w0z1 * probs.p_w0_z1() + *rates.pass1_w1z1 * probs.p_w1_z1();
  double min_hi = sample_part;
  double max_hi = sample_part + probs.p_z0();
  if (scope == MtrScope::population) {
    if (!rates.fail0_w0z0) {
      throw Error(ErrorKind::MissingPopulationOutcome,
                  "population MTR bound needs business-as-usual outcomes for z=0 units");
    }
    min_hi = sample_part + *rates.fail0_w0z0 * probs.p_w0_z0();
    max_hi = min_hi + probs.p_w1_z0();
  }

  const OutcomeSupport binary = OutcomeSupport::binary();
  auto make = [&](double hi, MtrVariant v) {
    PateInterval out;
    out.assumption = Assumption::mtr;
    out.framework = scope == MtrScope::sample ? Framework::full : Framework::reduced;
    out.variant = v;
    out.rates = rates;
    out.probs = probs;
    // Lower bound is exactly zero; the upper bound is E(Y^U(1)) - E(Y^L(0)).
    const PotentialOutcomeBounds b{0.0, hi, 0.0, 0.0};
    return finish(b, b, binary, out);
  };
  MtrResult r;
  r.scope = scope;
  r.min_variant = make(min_hi, MtrVariant::min);
  r.max_variant = make(max_hi, MtrVariant::max);
  return r;
}

MtrResult mtr_bounds(const StudyFrame& frame, const DesignProbs& probs, MtrScope scope) {
  if (!frame.binary_outcomes()) {
    throw Error(ErrorKind::NonBinaryOutcome, "monotone treatment response bounds need binary outcomes");
  }
  return mtr_bounds(empirical_rates(frame), probs, scope);
}

StratifiedBounds stratified_bounds(const StudyFrame& frame, const StratumAssignment& assignment,
                                   const BoundsRequest& request) {
  const auto slices = stratum_frames(frame, assignment);
  StratifiedBounds out;
  bool complete = true;
  for (int j = 0; j < assignment.k; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    const StudyFrame& sub = slices.frames[idx];
    StratumBounds sb;
    sb.stratum = j;
    sb.viable = slices.viable[idx];
    sb.population = sub.size();
    if (!sb.viable) {
      sb.skipped = "NonViableStratum: stratum lacks a sampled treated or control unit";
      complete = false;
      out.strata.push_back(std::move(sb));
      continue;
    }
    try {
      const DesignProbs probs = design_probs(sub, request.assumed_p_w0_given_z0);
      const EmpiricalRates rates = empirical_rates(sub);
      switch (request.assumption) {
        case Assumption::worst_case:
          sb.interval = worst_case_bounds(rates, probs, request.framework, sub.support());
          break;
        case Assumption::bsv:
          sb.interval =
              bsv_bounds(rates, probs, request.framework, request.lambda, sub.support(), request.bsv);
          break;
        case Assumption::mtr:
          sb.mtr = mtr_bounds(sub, probs,
                              request.framework == Framework::full ? MtrScope::sample
                                                                   : MtrScope::population);
          break;
      }
    } catch (const Error& e) {
      sb.skipped = e.what();
      complete = false;
    }
    out.strata.push_back(std::move(sb));
  }

  if (request.pooled && complete) {
    const double n = static_cast<double>(frame.size());
    auto pool = [&](auto pick) {
      PateInterval p = pick(out.strata.front());
      p.lo = p.hi = p.pre_clamp_lo = p.pre_clamp_hi = 0.0;
      p.clamped_lo = p.clamped_hi = false;
      for (const auto& s : out.strata) {
        const PateInterval& iv = pick(s);
        const double w = static_cast<double>(s.population) / n;
        p.lo += w * iv.lo;
        p.hi += w * iv.hi;
        p.pre_clamp_lo += w * iv.pre_clamp_lo;
        p.pre_clamp_hi += w * iv.pre_clamp_hi;
        p.clamped_lo = p.clamped_lo || iv.clamped_lo;
        p.clamped_hi = p.clamped_hi || iv.clamped_hi;
      }
      p.rates = empirical_rates(frame);
      p.probs = design_probs(frame, request.assumed_p_w0_given_z0);
      return p;
    };
    if (request.assumption == Assumption::mtr) {
      out.pooled = pool([](const StratumBounds& s) -> const PateInterval& { return s.mtr->min_variant; });
      out.pooled_mtr_max =
          pool([](const StratumBounds& s) -> const PateInterval& { return s.mtr->max_variant; });
    } else {
      out.pooled = pool([](const StratumBounds& s) -> const PateInterval& { return *s.interval; });
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const PateInterval& iv) {
  nlohmann::ordered_json j;
  j["assumption"] = to_string(iv.assumption);
  j["framework"] = to_string(iv.framework);
  if (iv.lambda) j["lambda"] = *iv.lambda;
  if (iv.variant) j["variant"] = to_string(*iv.variant);
  j["lo"] = iv.lo;
  j["hi"] = iv.hi;
  j["clamped"] = {{"lo", iv.clamped_lo}, {"hi", iv.clamped_hi}};
  j["pre_clamp"] = {{"lo", iv.pre_clamp_lo}, {"hi", iv.pre_clamp_hi}};
  nlohmann::ordered_json in;
  in["p_z1"] = iv.probs.p_z1;
  in["p_w1_given_z1"] = iv.probs.p_w1_given_z1;
  in["p_w0_given_z0"] = iv.probs.p_w0_given_z0;
  in["e_y1_w1z1"] = iv.rates.e_y1_w1z1;
  in["e_y0_w0z1"] = iv.rates.e_y0_w0z1;
  if (iv.rates.e_y0_w0z0) in["e_y0_w0z0"] = *iv.rates.e_y0_w0z0;
  if (iv.rates.pass1_w1z1) in["pass1_w1z1"] = *iv.rates.pass1_w1z1;
  if (iv.rates.fail0_w0z1) in["fail0_w0z1"] = *iv.rates.fail0_w0z1;
  if (iv.rates.fail0_w0z0) in["fail0_w0z0"] = *iv.rates.fail0_w0z0;
  j["inputs"] = std::move(in);
  return j;
}

}  // namespace pibgen
