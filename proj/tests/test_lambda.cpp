#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pibgen/error.hpp"
#include "pibgen/lambda.hpp"

using namespace pibgen;
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

// Two covariates with known ASMDs: a = 0.5 * sqrt(1.5), b = 0, plus a constant.
StudyFrame balance_frame() {
  const double s = std::sqrt(1.5);
  const std::vector<double> a{s, 0.0, -s, 0.0, s, -s};
  const std::vector<double> b{1.0, -1.0, 1.0, -1.0, 1.0, -1.0};
  std::vector<UnitRecord> units;
  for (std::size_t i = 0; i < a.size(); ++i) {
    units.push_back(i < 2 ? unit("s" + std::to_string(i), 1, static_cast<int>(i), i == 0 ? 1.0 : 0.0,
                                 {a[i], b[i], 3.0})
                          : unit("p" + std::to_string(i), 0, std::nullopt, std::nullopt, {a[i], b[i], 3.0}));
  }
  return StudyFrame(units, OutcomeSupport::binary(), {"a", "b", "const"});
}

}  // namespace

TEST_CASE("parse and print") {
  CHECK(parse_lambda_spec("0.3").mode == LambdaSpec::Mode::fixed);
  CHECK(parse_lambda_spec(" 0.3 ").value == 0.3);
  const auto a = parse_lambda_spec("asmd:max:pretest,size");
  CHECK(a.mode == LambdaSpec::Mode::asmd);
  CHECK(a.aggregate == AsmdAggregate::max);
  CHECK(a.covariates == std::vector<std::string>{"pretest", "size"});
  CHECK(parse_lambda_spec("asmd:single:pretest").aggregate == AsmdAggregate::single);
  const auto sd = parse_lambda_spec("sd:max_arm:1.5");
  CHECK(sd.mode == LambdaSpec::Mode::outcome_sd);
  CHECK(sd.arm_rule == ArmRule::max_arm);
  CHECK(sd.multiplier == 1.5);
  CHECK(parse_lambda_spec("sd:pooled").multiplier == 2.0);

  for (const char* text : {"0.25", "asmd:mean:a,b", "asmd:single:a", "sd:pooled", "sd:max_arm:1.5"}) {
    CHECK(to_string(parse_lambda_spec(text)) == text);
  }

  CHECK(kind_of([] { parse_lambda_spec("-0.1"); }) == ErrorKind::NegativeLambda);
  CHECK(kind_of([] { parse_lambda_spec("sd:pooled:-1"); }) == ErrorKind::NegativeLambda);
  for (const char* bad : {"", "abc", "asmd:max", "asmd:median:a", "asmd:max:a,,b", "asmd:single:a,b",
                          "sd", "sd:other", "sd:pooled:x", "sd:pooled:1:2"}) {
    CAPTURE(bad);
    CHECK(kind_of([&] { parse_lambda_spec(bad); }) == ErrorKind::BadConfig);
  }
}

TEST_CASE("asmd rules") {
  const auto f = balance_frame();
  const auto balance = balance_report(f, f.covariate_names());
  const double a = 0.5 * std::sqrt(1.5);
  CHECK(resolve_lambda(parse_lambda_spec("asmd:single:a"), f, balance) == doctest::Approx(a));
  CHECK(resolve_lambda(parse_lambda_spec("asmd:single:b"), f, balance) == doctest::Approx(0.0).scale(1.0));
  CHECK(resolve_lambda(parse_lambda_spec("asmd:max:a,b"), f, balance) == doctest::Approx(a));
  CHECK(resolve_lambda(parse_lambda_spec("asmd:mean:a,b"), f, balance) == doctest::Approx(a / 2.0));
  CHECK(kind_of([&] { resolve_lambda(parse_lambda_spec("asmd:max:a,const"), f, balance); }) ==
        ErrorKind::ZeroVariance);
  CHECK(kind_of([&] { resolve_lambda(parse_lambda_spec("asmd:max:nope"), f, balance); }) ==
        ErrorKind::UnknownCovariate);
  CHECK(resolve_lambda(LambdaSpec::fixed(0.7), f, balance) == 0.7);
}

TEST_CASE("max is never below mean") {
  const auto f = testutil::synthetic_frame();
  const auto balance = balance_report(f, f.covariate_names());
  const auto covs = f.covariate_names();
  const double mx = resolve_lambda(LambdaSpec::asmd(covs, AsmdAggregate::max), f, balance);
  const double mean = resolve_lambda(LambdaSpec::asmd(covs, AsmdAggregate::mean), f, balance);
  CHECK(mx >= mean);
  CHECK(mean > 0.0);
}

TEST_CASE("outcome SD rules") {
  SUBCASE("pass rate 0.0257") {
    std::vector<double> treated(5000, 0.0), control(5000, 0.0);
    for (int i = 0; i < 129; ++i) treated[static_cast<std::size_t>(i)] = 1.0;
    for (int i = 0; i < 128; ++i) control[static_cast<std::size_t>(i)] = 1.0;
    const auto f = testutil::arms_frame(treated, control);
    const BalanceReport none;
    CHECK(sample_outcome_variance(f) == doctest::Approx(0.0257 * 0.9743));
    CHECK(resolve_lambda(parse_lambda_spec("sd:pooled"), f, none) == doctest::Approx(0.316).epsilon(0.002));
    const double v1 = 0.0258 * 0.9742, v0 = 0.0256 * 0.9744;
    CHECK(resolve_lambda(parse_lambda_spec("sd:max_arm:1"), f, none) ==
          doctest::Approx(std::sqrt(std::max(v1, v0))));
  }
  SUBCASE("constant outcome gives zero") {
    const auto f = testutil::arms_frame({1, 1, 1}, {1, 1});
    CHECK(resolve_lambda(parse_lambda_spec("sd:pooled"), f, {}) == 0.0);
    CHECK(resolve_lambda(parse_lambda_spec("sd:max_arm"), f, {}) == 0.0);
  }
  SUBCASE("empty arm") {
    const auto f = testutil::arms_frame({1, 0}, {});
    CHECK(kind_of([&] { resolve_lambda(parse_lambda_spec("sd:max_arm"), f, {}); }) == ErrorKind::EmptyArm);
  }
}

TEST_CASE("candidate report") {
  const auto f = balance_frame();
  const auto rows = lambda_report(f, balance_report(f, f.covariate_names()));
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].rule == "asmd:single:a");
  CHECK(rows[1].rule == "asmd:single:b");
  CHECK(rows[2].rule == "asmd:mean:a,b");
  CHECK(rows[3].rule == "asmd:max:a,b");
  CHECK(rows[4].rule == "sd:pooled");
  CHECK(rows[5].rule == "sd:max_arm");
  CHECK(rows[4].value == doctest::Approx(1.0));
  CHECK(rows[5].value == 0.0);
  for (const auto& r : rows) CHECK(resolve_lambda(parse_lambda_spec(r.rule), f, balance_report(f, f.covariate_names())) == r.value);
}
