#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "pibgen/error.hpp"
#include "pibgen/oracle.hpp"

using namespace pibgen;
using namespace pibgen::oracle;
using testutil::unit;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Io;
}

// t1 (y=1), c2 (y=0), p3 unlabeled without outcome (arm 1), p4 with y=1 (arm 0).
StudyFrame four_units() {
  return StudyFrame({unit("t1", 1, 1, 1.0), unit("c2", 1, 0, 0.0), unit("p3", 0, std::nullopt, std::nullopt),
                     unit("p4", 0, std::nullopt, 1.0)},
                    OutcomeSupport::binary(), {});
}

}  // namespace

TEST_CASE("rational arithmetic") {
  CHECK(Rational(1, 2) + Rational(1, 3) == Rational(5, 6));
  CHECK(Rational(2, -4) == Rational(-1, 2));
  CHECK(Rational(2, -4).den() == 2);
  CHECK(Rational(3, 4) * Rational(2, 3) == Rational(1, 2));
  CHECK(Rational(1, 2) / Rational(1, 4) == Rational(2));
  CHECK(Rational(1, 3) - Rational(1, 2) == Rational(-1, 6));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK(-Rational(1, 3) < Rational(0));
  CHECK(Rational(7, 21).str() == "1/3");
  CHECK(Rational(4).str() == "4");
  CHECK(Rational(1, 10).to_double() == 0.1);
}

TEST_CASE("completion enumeration") {
  const std::vector<UnitSlots> units{{1, std::nullopt}, {std::nullopt, std::nullopt}};
  const auto any = enumerate_completions(units, false);
  CHECK(any.min == -2);
  CHECK(any.max == 1);
  CHECK(any.completions == 8);
  const auto mono = enumerate_completions(units, true);
  CHECK(mono.min == 0);
  CHECK(mono.max == 1);
  CHECK(mono.completions == 3);

  const std::vector<UnitSlots> fixed{{0, 1}, {1, 1}};
  const auto f = enumerate_completions(fixed, true);
  CHECK(f.min == 1);
  CHECK(f.max == 1);
  CHECK(f.completions == 1);

  const std::vector<UnitSlots> violating{{1, 0}};
  CHECK(enumerate_completions(violating, false).min == -1);
  CHECK(kind_of([&] { enumerate_completions(violating, true); }) == ErrorKind::ObservedViolation);

  const std::vector<UnitSlots> big(13);
  CHECK(kind_of([&] { enumerate_completions(big, false); }) == ErrorKind::TooLarge);
}

TEST_CASE("four-unit frame by hand") {
  const auto f = four_units();
  const auto in = exact_inputs(f);
  CHECK(in.p_z1 == Rational(1, 2));
  CHECK(in.p_w0_given_z0 == Rational(1, 2));
  CHECK(*in.q0 == Rational(1));
  CHECK(in.n_z0_arm0 == 1);

  const auto full = enumerate_worst_case(f, Framework::full);
  CHECK(full.lo == Rational(0));
  CHECK(full.hi == Rational(1));
  const auto red = enumerate_worst_case(f, Framework::reduced);
  CHECK(red.lo == Rational(0));
  CHECK(red.hi == Rational(3, 4));

  const auto mtr = enumerate_mtr(f, MtrScope::population);
  CHECK(mtr.max_variant.lo == Rational(0));
  CHECK(mtr.min_variant.hi <= mtr.max_variant.hi);

  const auto zero = enumerate_bsv(f, Framework::full, Rational(0));
  CHECK(zero.lo == Rational(1));
  CHECK(zero.hi == Rational(1));

  const auto report = verify_frame(f, default_lambdas());
  CHECK(report.pass());
  CHECK(report.skipped.empty());
}

TEST_CASE("census frame is a point") {
  const auto f = testutil::arms_frame({1, 0, 1}, {0, 0});
  const auto iv = enumerate_worst_case(f, Framework::full);
  CHECK(iv.lo == Rational(2, 3));
  CHECK(iv.hi == Rational(2, 3));
  const auto report = verify_frame(f, default_lambdas());
  CHECK(report.pass());
  CHECK_FALSE(report.skipped.empty());
}

TEST_CASE("frame requirements") {
  CHECK(kind_of([] { exact_inputs(testutil::arms_frame({1}, {})); }) == ErrorKind::EmptyArm);
  CHECK(kind_of([] {
          exact_inputs(testutil::arms_frame({10}, {20}, {}, OutcomeSupport::make(0, 100)));
        }) == ErrorKind::NonBinaryOutcome);
  const StudyFrame labeled({unit("t", 1, 1, 1.0), unit("c", 1, 0, 0.0), unit("p", 0, 0, std::nullopt)},
                           OutcomeSupport::binary(), {});
  CHECK(kind_of([&] { exact_inputs(labeled); }) == ErrorKind::BadConfig);
  const auto no_q0 = testutil::arms_frame({1}, {0}, {std::nullopt});
  CHECK(kind_of([&] { enumerate_bsv(no_q0, Framework::reduced, Rational(1, 10)); }) ==
        ErrorKind::MissingPopulationOutcome);
}

TEST_CASE("bsv corner sweep matches the closed form at the corners") {
  const auto f = four_units();
  for (const auto& lambda : default_lambdas()) {
    CAPTURE(lambda.str());
    const auto exact = enumerate_bsv(f, Framework::reduced, lambda);
    const auto sweep = enumerate_bsv(empirical_rates(f), oracle_probs(f), Framework::reduced, lambda.to_double(),
                                     OutcomeSupport::binary());
    CHECK(sweep.lo == doctest::Approx(exact.lo.to_double()).epsilon(1e-15));
    CHECK(sweep.hi == doctest::Approx(exact.hi.to_double()).epsilon(1e-15));
  }
  SUBCASE("general support") {
    const auto r = EmpiricalRates::from_means(80.0, 30.0, 50.0, false);
    DesignProbs p;
    p.p_z1 = 0.3;
    p.p_w1_given_z1 = 0.5;
    const auto s = enumerate_bsv(r, p, Framework::full, 25.0, OutcomeSupport::make(0, 100));
    const auto closed = bsv_bounds(r, p, Framework::full, 25.0, OutcomeSupport::make(0, 100));
    CHECK(s.lo == doctest::Approx(closed.lo));
    CHECK(s.hi == doctest::Approx(closed.hi));
  }
}

TEST_CASE("a perturbed engine is caught") {
  const auto f = four_units();
  Engine bad = default_engine();
  bad.worst_case = [](const EmpiricalRates& r, const DesignProbs& p, Framework fw, const OutcomeSupport& s) {
    auto iv = worst_case_bounds(r, p, fw, s);
    iv.hi += 1e-9;
    return iv;
  };
  const auto report = verify_frame(f, default_lambdas(), bad);
  CHECK_FALSE(report.pass());
  int failures = 0;
  for (const auto& c : report.checks) {
    if (!c.pass) {
      ++failures;
      CHECK(c.name.rfind("worst_case/", 0) == 0);
    }
  }
  CHECK(failures == 2);

  Engine swapped = default_engine();
  swapped.mtr = [](const EmpiricalRates& r, const DesignProbs& p, MtrScope s) {
    auto m = mtr_bounds(r, p, s);
    std::swap(m.min_variant, m.max_variant);
    return m;
  };
  CHECK_FALSE(verify_frame(f, default_lambdas(), swapped).pass());
}

TEST_CASE("random frames agree with the engine") {
  std::mt19937_64 rng(20240601);
  int skipped = 0;
  for (int i = 0; i < 300; ++i) {
    const auto f = random_frame(rng, 10, i % 2 == 0);
    REQUIRE(f.size() >= 2);
    REQUIRE(f.size() <= 10);
    const auto report = verify_frame(f, default_lambdas());
    if (!report.pass()) {
      for (const auto& c : report.checks) {
        if (!c.pass) FAIL_CHECK(c.name << "\n" << describe_frame(f));
      }
    }
    if (!report.skipped.empty()) ++skipped;
  }
  CHECK(skipped >= 150);
}

TEST_CASE("random frames are reproducible") {
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 20; ++i) CHECK(describe_frame(random_frame(a)) == describe_frame(random_frame(b)));
  std::mt19937_64 c(5);
  CHECK(describe_frame(random_frame(c)).rfind("id,z,w,y\n", 0) == 0);
}
