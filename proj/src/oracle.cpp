#include "pibgen/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pibgen/error.hpp"

namespace pibgen::oracle {

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (d == 0) throw Error(ErrorKind::BadConfig, "rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
  num_ = g ? n / g : 0;
  den_ = g ? d / g : 1;
}

std::string Rational::str() const {
  return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}
Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
Rational operator*(const Rational& a, const Rational& b) {
  return Rational(a.num_ * b.num_, a.den_ * b.den_);
}
Rational operator/(const Rational& a, const Rational& b) {
  return Rational(a.num_ * b.den_, a.den_ * b.num_);
}
std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  const __int128 l = static_cast<__int128>(a.num_) * b.den_;
  const __int128 r = static_cast<__int128>(b.num_) * a.den_;
  return l < r ? std::strong_ordering::less
         : l > r ? std::strong_ordering::greater
                 : std::strong_ordering::equal;
}

SumRange enumerate_completions(std::span<const UnitSlots> units, bool monotone) {
  // values[i] = {y0, y1}, -1 for free
  std::vector<std::array<int, 2>> values;
  std::vector<std::pair<std::size_t, int>> free;
  values.reserve(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    values.push_back({u.y0 ? *u.y0 : -1, u.y1 ? *u.y1 : -1});
    if (monotone && u.y0 && u.y1 && *u.y1 < *u.y0) {
      throw Error(ErrorKind::ObservedViolation,
                  "unit " + std::to_string(i) + " is observed with y1 < y0");
    }
    if (!u.y0) free.emplace_back(i, 0);
    if (!u.y1) free.emplace_back(i, 1);
  }
  if (free.size() > static_cast<std::size_t>(kMaxFreeSlots)) {
    throw Error(ErrorKind::TooLarge, std::to_string(free.size()) + " free slots exceed the cap of " +
                                         std::to_string(kMaxFreeSlots));
  }

  SumRange out;
  bool any = false;
  const std::uint64_t total = std::uint64_t{1} << free.size();
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (std::size_t b = 0; b < free.size(); ++b) {
      values[free[b].first][static_cast<std::size_t>(free[b].second)] =
          static_cast<int>((mask >> b) & 1U);
    }
    std::int64_t sum = 0;
    bool feasible = true;
    for (const auto& v : values) {
      if (monotone && v[1] < v[0]) {
        feasible = false;
        break;
      }
      sum += v[1] - v[0];
    }
    if (!feasible) continue;
    ++out.completions;
    if (!any) {
      out.min = out.max = sum;
      any = true;
    } else {
      out.min = std::min(out.min, sum);
      out.max = std::max(out.max, sum);
    }
  }
  return out;
}

namespace {

int arm_of_z0(const UnitRecord& u) {
  const int arm = u.w ? *u.w : (u.y ? 0 : 1);
  if (arm == 0 && !u.y) {
    throw Error(ErrorKind::BadConfig, "z=0 unit '" + u.id + "' labeled w=0 has no outcome");
  }
  if (arm == 1 && u.y) {
    throw Error(ErrorKind::BadConfig, "z=0 unit '" + u.id + "' labeled w=1 carries an outcome");
  }
  return arm;
}

int as_bit(double y) { return y > 0.5 ? 1 : 0; }

}  // namespace

ExactInputs exact_inputs(const StudyFrame& frame) {
  if (!frame.binary_outcomes()) {
    throw Error(ErrorKind::NonBinaryOutcome, "the enumeration oracle needs binary outcomes");
  }
  ExactInputs in;
  in.n_units = static_cast<std::int64_t>(frame.size());
  std::int64_t s1 = 0, s0 = 0, z0 = 0, pass_z0 = 0;
  for (const auto& u : frame.units()) {
    if (u.z == 1) {
      if (*u.w == 1) {
        ++in.n_treated;
        s1 += as_bit(*u.y);
      } else {
        ++in.n_control;
        s0 += as_bit(*u.y);
      }
    } else {
      ++z0;
      if (arm_of_z0(u) == 0) {
        ++in.n_z0_arm0;
        pass_z0 += as_bit(*u.y);
      }
    }
  }
  if (in.n_treated == 0) throw Error(ErrorKind::EmptyArm, "no sampled treated units");
  if (in.n_control == 0) throw Error(ErrorKind::EmptyArm, "no sampled control units");
  const std::int64_t n = in.n_treated + in.n_control;
  in.p_z1 = Rational(n, in.n_units);
  in.p_w1_given_z1 = Rational(in.n_treated, n);
  in.p_w0_given_z0 = z0 > 0 ? Rational(in.n_z0_arm0, z0) : Rational(1, 2);
  in.e1 = Rational(s1, in.n_treated);
  in.e0 = Rational(s0, in.n_control);
  in.pass1 = in.e1;
  in.fail0 = Rational(1) - in.e0;
  if (in.n_z0_arm0 > 0) {
    in.q0 = Rational(pass_z0, in.n_z0_arm0);
    in.fail0_z0 = Rational(1) - *in.q0;
  }
  return in;
}

DesignProbs oracle_probs(const StudyFrame& frame) {
  const ExactInputs in = exact_inputs(frame);
  DesignProbs p = design_probs(frame, in.p_w0_given_z0.to_double());
  return p;
}

ExactInterval enumerate_worst_case(const StudyFrame& frame, Framework framework) {
  const ExactInputs in = exact_inputs(frame);
  std::vector<UnitSlots> slots;
  for (const auto& u : frame.units()) {
    if (u.z == 1) continue;
    UnitSlots s;
    if (framework == Framework::reduced && arm_of_z0(u) == 0) s.y0 = as_bit(*u.y);
    slots.push_back(s);
  }
  const SumRange r = enumerate_completions(slots, false);
  // Randomization identifies the sampled units' total effect as n * (e1 - e0).
  const Rational base = Rational(in.n_treated + in.n_control) * (in.e1 - in.e0);
  return {(base + Rational(r.min)) / Rational(in.n_units),
          (base + Rational(r.max)) / Rational(in.n_units)};
}

ExactMtr enumerate_mtr(const StudyFrame& frame, MtrScope scope) {
  const ExactInputs in = exact_inputs(frame);
  std::vector<UnitSlots> open, pinned;
  for (const auto& u : frame.units()) {
    UnitSlots s;
    if (u.z == 1) {
      (*u.w == 1 ? s.y1 : s.y0) = as_bit(*u.y);
      open.push_back(s);
      pinned.push_back(s);
      continue;
    }
    if (scope == MtrScope::population && arm_of_z0(u) == 0) {
      s.y0 = as_bit(*u.y);
      open.push_back(s);
      pinned.push_back(s);
      continue;
    }
    open.push_back(s);
    pinned.push_back({0, 0});
  }
  const Rational n(in.n_units);
  const SumRange max_r = enumerate_completions(open, true);
  const SumRange min_r = enumerate_completions(pinned, true);
  ExactMtr out;
  out.max_variant = {Rational(max_r.min) / n, Rational(max_r.max) / n};
  out.min_variant = {Rational(min_r.min) / n, Rational(min_r.max) / n};
  return out;
}

namespace {

template <typename T>
std::pair<T, T> bsv_sweep(T p1, T pw1z0, T pw0z0, T e1, T e0, std::optional<T> q0, T lambda,
                          T lo, T hi) {
  const std::array<T, 2> y1_box{std::max(e1 - lambda, lo), std::min(e1 + lambda, hi)};
  const std::array<T, 2> y0_box{std::max(e0 - lambda, lo), std::min(e0 + lambda, hi)};
  std::array<T, 2> b0_box = y0_box;
  if (q0) b0_box = {*q0, *q0};
  const T identified = p1 * (e1 - e0);
  bool first = true;
  T best_lo{}, best_hi{};
  for (const T& a1 : y1_box) {
    for (const T& b1 : y1_box) {
      for (const T& a0 : y0_box) {
        for (const T& b0 : b0_box) {
          const T v = identified + pw1z0 * (a1 - a0) + pw0z0 * (b1 - b0);
          if (first) {
            best_lo = best_hi = v;
            first = false;
          } else {
            best_lo = std::min(best_lo, v);
            best_hi = std::max(best_hi, v);
          }
        }
      }
    }
  }
  return {best_lo, best_hi};
}

}  // namespace

ExactInterval enumerate_bsv(const StudyFrame& frame, Framework framework, Rational lambda) {
  if (lambda < Rational(0)) throw Error(ErrorKind::NegativeLambda, "lambda must be >= 0");
  const ExactInputs in = exact_inputs(frame);
  std::optional<Rational> q0;
  if (framework == Framework::reduced) {
    if (!in.q0) {
      throw Error(ErrorKind::MissingPopulationOutcome,
                  "reduced framework needs outcomes for z=0 units");
    }
    q0 = in.q0;
  }
  const Rational p0 = Rational(1) - in.p_z1;
  const Rational pw0z0 = in.p_w0_given_z0 * p0;
  const Rational pw1z0 = p0 - pw0z0;
  const auto [lo, hi] =
      bsv_sweep<Rational>(in.p_z1, pw1z0, pw0z0, in.e1, in.e0, q0, lambda, Rational(0), Rational(1));
  return {lo, hi};
}

FloatInterval enumerate_bsv(const EmpiricalRates& rates, const DesignProbs& probs,
                            Framework framework, double lambda, const OutcomeSupport& support) {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::NegativeLambda, "lambda must be >= 0");
  std::optional<double> q0;
  if (framework == Framework::reduced) {
    if (!rates.e_y0_w0z0) {
      throw Error(ErrorKind::MissingPopulationOutcome,
                  "reduced framework needs outcomes for z=0 units");
    }
    q0 = rates.e_y0_w0z0;
  }
  const auto [lo, hi] = bsv_sweep<double>(probs.p_z1, probs.p_w1_z0(), probs.p_w0_z0(),
                                          rates.e_y1_w1z1, rates.e_y0_w0z1, q0, lambda, support.lo,
                                          support.hi);
  return {lo, hi};
}

Engine default_engine() {
  Engine e;
  e.worst_case = [](const EmpiricalRates& r, const DesignProbs& p, Framework f,
                    const OutcomeSupport& s) { return worst_case_bounds(r, p, f, s); };
  e.bsv = [](const EmpiricalRates& r, const DesignProbs& p, Framework f, double lambda,
             const OutcomeSupport& s) { return bsv_bounds(r, p, f, lambda, s); };
  e.mtr = [](const EmpiricalRates& r, const DesignProbs& p, MtrScope scope) {
    return mtr_bounds(r, p, scope);
  };
  return e;
}

bool VerifyReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::vector<Rational> default_lambdas() {
  return {Rational(0), Rational(1, 10), Rational(1, 4), Rational(1, 2), Rational(1)};
}

VerifyReport verify_frame(const StudyFrame& frame, std::span<const Rational> lambdas,
                          const Engine& engine, double tolerance) {
  const ExactInputs in = exact_inputs(frame);
  const DesignProbs probs = oracle_probs(frame);
  const EmpiricalRates rates = empirical_rates(frame);
  const OutcomeSupport support = OutcomeSupport::binary();
  const bool population = in.q0.has_value();

  VerifyReport report;
  auto record = [&](std::string name, const ExactInterval& exact, double lo, double hi) {
    Check c;
    c.name = std::move(name);
    c.oracle_lo = exact.lo.to_double();
    c.oracle_hi = exact.hi.to_double();
    c.engine_lo = lo;
    c.engine_hi = hi;
    c.pass = std::abs(c.oracle_lo - lo) <= tolerance && std::abs(c.oracle_hi - hi) <= tolerance;
    report.checks.push_back(std::move(c));
  };

  std::vector<Framework> frameworks{Framework::full};
  if (population) {
    frameworks.push_back(Framework::reduced);
  } else {
    report.skipped.emplace_back("reduced framework and population-scope MTR: no z=0 outcomes");
  }

  for (Framework f : frameworks) {
    const auto fw = std::string(to_string(f));
    const auto iv = engine.worst_case(rates, probs, f, support);
    record("worst_case/" + fw, enumerate_worst_case(frame, f), iv.lo, iv.hi);
    for (const Rational& lambda : lambdas) {
      const auto b = engine.bsv(rates, probs, f, lambda.to_double(), support);
      record("bsv/" + fw + "/lambda=" + lambda.str(), enumerate_bsv(frame, f, lambda), b.lo, b.hi);
    }
  }

  std::vector<MtrScope> scopes{MtrScope::sample};
  if (population) scopes.push_back(MtrScope::population);
  for (MtrScope scope : scopes) {
    const auto sc = std::string(to_string(scope));
    const MtrResult m = engine.mtr(rates, probs, scope);
    const ExactMtr exact = enumerate_mtr(frame, scope);
    record("mtr/" + sc + "/max", exact.max_variant, m.max_variant.lo, m.max_variant.hi);
    record("mtr/" + sc + "/min", exact.min_variant, m.min_variant.lo, m.min_variant.hi);
  }
  return report;
}

StudyFrame random_frame(std::mt19937_64& rng, int max_units, bool population_outcomes) {
  auto below = [&rng](int k) { return static_cast<int>(rng() % static_cast<std::uint64_t>(k)); };
  max_units = std::max(max_units, 2);
  const int n_units = 2 + below(max_units - 1);
  const int n_sample = 2 + below(n_units - 1);
  const int n_treated = 1 + below(n_sample - 1);
  // per-frame success rates keep lopsided frames in the mix
  const int rate = below(11);
  auto outcome = [&] { return below(10) < rate ? 1.0 : 0.0; };

  std::vector<UnitRecord> units;
  for (int i = 0; i < n_units; ++i) {
    UnitRecord u;
    u.id = "u" + std::to_string(i + 1);
    if (i < n_sample) {
      u.z = 1;
      u.w = i < n_treated ? 1 : 0;
      u.y = outcome();
    } else if (population_outcomes) {
      u.w = below(2);
      if (*u.w == 0) u.y = outcome();
    }
    units.push_back(std::move(u));
  }
  return StudyFrame(std::move(units), OutcomeSupport::binary(), {});
}

std::string describe_frame(const StudyFrame& frame) {
  std::ostringstream os;
  os << "id,z,w,y\n";
  for (const auto& u : frame.units()) {
    os << u.id << ',' << u.z << ',';
    if (u.w) os << *u.w;
    os << ',';
    if (u.y) os << *u.y;
    os << '\n';
  }
  return os.str();
}

}  // namespace pibgen::oracle
