#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "pibgen/error.hpp"
#include "pibgen/frame.hpp"

using namespace pibgen;
using testutil::arms_frame;
using testutil::csv_frame;

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

}  // namespace

TEST_CASE("minimal three-row frame") {
  const auto f = csv_frame(
      "id,in_sample,treatment,outcome\n"
      "a,1,1,1\n"
      "b,1,0,0\n"
      "c,0,,\n");
  CHECK(f.size() == 3);
  CHECK(f.sample_size() == 2);
  CHECK(f.binary_outcomes());
  CHECK(f.covariate_names().empty());
  CHECK_FALSE(f.units()[2].w.has_value());
  CHECK_FALSE(f.units()[2].y.has_value());
}

TEST_CASE("ingestion errors carry their kind, row and column") {
  SUBCASE("outcome outside binary support") {
    try {
      csv_frame("id,in_sample,treatment,outcome\na,1,1,1\nb,1,0,1.5\n");
      FAIL("expected OutcomeOutOfSupport");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::OutcomeOutOfSupport);
      CHECK(e.row() == 2);
      CHECK(e.column() == "outcome");
    }
  }
  SUBCASE("missing role column") {
    CHECK(kind_of([] { csv_frame("id,in_sample,outcome\na,1,1\n"); }) == ErrorKind::MissingColumn);
  }
  SUBCASE("bad indicator") {
    CHECK(kind_of([] { csv_frame("id,in_sample,treatment,outcome\na,2,1,1\n"); }) ==
          ErrorKind::BadIndicator);
    CHECK(kind_of([] { csv_frame("id,in_sample,treatment,outcome\na,1,yes,1\n"); }) ==
          ErrorKind::BadIndicator);
  }
  SUBCASE("sampled unit without outcome") {
    CHECK(kind_of([] { csv_frame("id,in_sample,treatment,outcome\na,1,1,\n"); }) ==
          ErrorKind::MissingSampleValue);
  }
  SUBCASE("missing covariate value") {
    try {
      csv_frame("id,in_sample,treatment,outcome,x\na,1,1,1,0.5\nb,0,,,\n");
      FAIL("expected MissingCovariate");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MissingCovariate);
      CHECK(e.row() == 2);
      CHECK(e.column() == "x");
    }
  }
  SUBCASE("non-numeric covariate") {
    CHECK(kind_of([] { csv_frame("id,in_sample,treatment,outcome,x\na,1,1,1,abc\n"); }) ==
          ErrorKind::BadNumber);
  }
  SUBCASE("invalid support") {
    CHECK(kind_of([] { OutcomeSupport::make(1.0, 1.0); }) == ErrorKind::InvalidSupport);
  }
}

TEST_CASE("covariate selection, exclusion and quoting") {
  const std::string text =
      "id,in_sample,treatment,outcome,x1,\"x, 2\",note\n"
      "a,1,1,1,1.5,2,\"free, text\"\n"
      "b,1,0,0,2.5,3,n\n";
  CsvSchema schema;
  schema.exclude = {"note"};
  const auto f = csv_frame(text, OutcomeSupport::binary(), schema);
  REQUIRE(f.covariate_names() == std::vector<std::string>{"x1", "x, 2"});
  CHECK(f.covariate_column("x, 2") == std::vector<double>{2.0, 3.0});

  schema.exclude.clear();
  schema.covariates = {"x1"};
  const auto g = csv_frame(text, OutcomeSupport::binary(), schema);
  CHECK(g.covariate_names() == std::vector<std::string>{"x1"});
  CHECK(kind_of([&] { g.covariate_column("x, 2"); }) == ErrorKind::UnknownCovariate);
}

TEST_CASE("categorical columns become dummies against the reference level") {
  CsvSchema schema;
  schema.categorical = {{"locale", "rural"}};
  const auto f = csv_frame(
      "id,in_sample,treatment,outcome,locale\n"
      "a,1,1,1,urban\n"
      "b,1,0,0,rural\n"
      "c,0,,,town\n",
      OutcomeSupport::binary(), schema);
  REQUIRE(f.covariate_names() == std::vector<std::string>{"locale=town", "locale=urban"});
  CHECK(f.units()[0].x == std::vector<double>{0.0, 1.0});
  CHECK(f.units()[1].x == std::vector<double>{0.0, 0.0});
  CHECK(f.units()[2].x == std::vector<double>{1.0, 0.0});

  schema.categorical = {{"locale", "suburb"}};
  CHECK(kind_of([&] {
          csv_frame("id,in_sample,treatment,outcome,locale\na,1,1,1,urban\n", OutcomeSupport::binary(),
                    schema);
        }) == ErrorKind::BadConfig);
}

TEST_CASE("two-file mode tags z and drops sampled ids from the population") {
  std::istringstream sample(
      "id,treatment,outcome,x\n"
      "s1,1,1,0.1\n"
      "s2,0,0,0.2\n");
  std::istringstream population(
      "id,x\n"
      "s1,0.1\n"
      "s2,0.2\n"
      "p1,0.3\n"
      "p2,0.4\n");
  CsvSchema schema;
  const auto f = load_two_files(sample, population, schema, OutcomeSupport::binary());
  REQUIRE(f.size() == 4);
  CHECK(f.sample_size() == 2);
  CHECK(f.units()[2].id == "p1");
  CHECK(f.units()[2].z == 0);
  CHECK(f.covariate_column("x") == std::vector<double>{0.1, 0.2, 0.3, 0.4});
}

TEST_CASE("design probabilities are exact count ratios") {
  SUBCASE("synthetic school frame") {
    const auto f = testutil::synthetic_frame();
    REQUIRE(f.size() == 1029);
    REQUIRE(f.sample_size() == 56);
    const auto p = design_probs(f, 0.5);
    CHECK(p.p_z1 == 56.0 / 1029.0);
    CHECK(p.p_w1_given_z1 == 34.0 / 56.0);
    CHECK(p.p_w0_given_z0 == 0.5);
    CHECK(p.p_z1 * 1029.0 == doctest::Approx(56.0).epsilon(1e-15));
  }
  SUBCASE("census") {
    const auto p = design_probs(arms_frame({1, 0}, {0}), 0.5);
    CHECK(p.p_z1 == 1.0);
    CHECK(p.p_z0() == 0.0);
  }
  SUBCASE("two of eight sampled") {
    const auto f = arms_frame({1}, {0}, {std::nullopt, 1.0, 0.0, std::nullopt, 1.0, 1.0});
    const auto p = design_probs(f, 0.5);
    CHECK(p.p_z1 == 0.25);
    CHECK(p.p_w1_given_z1 == 0.5);
    CHECK(p.p_w0_z0() == 0.375);
  }
  SUBCASE("errors") {
    const StudyFrame none({testutil::unit("a", 0, std::nullopt, std::nullopt)}, OutcomeSupport::binary(), {});
    CHECK(kind_of([&] { design_probs(none, 0.5); }) == ErrorKind::EmptySample);
    CHECK(kind_of([] { design_probs(arms_frame({1}, {0}), 1.5); }) == ErrorKind::BadConfig);
  }
}

TEST_CASE("empirical rates") {
  SUBCASE("hand means, no population outcomes") {
    const auto r = empirical_rates(arms_frame({1, 1, 0}, {0, 1}, {std::nullopt}));
    CHECK(r.e_y1_w1z1 == doctest::Approx(2.0 / 3.0));
    CHECK(r.e_y0_w0z1 == 0.5);
    CHECK_FALSE(r.e_y0_w0z0.has_value());
    CHECK(r.pass1_w1z1 == r.e_y1_w1z1);
    CHECK(*r.fail0_w0z1 == 0.5);
  }
  SUBCASE("constant outcome") {
    const auto r = empirical_rates(arms_frame({1, 1}, {1}, {1.0, 1.0}));
    CHECK(r.e_y1_w1z1 == 1.0);
    CHECK(r.e_y0_w0z1 == 1.0);
    CHECK(*r.e_y0_w0z0 == 1.0);
    CHECK(*r.fail0_w0z0 == 0.0);
  }
  SUBCASE("population mean excludes sampled units") {
    std::vector<std::optional<double>> others(100, 1.0);
    for (int i = 0; i < 9; ++i) others[static_cast<std::size_t>(i)] = 0.0;
    const auto r = empirical_rates(arms_frame({0, 0}, {0, 0}, others));
    CHECK(*r.e_y0_w0z0 == doctest::Approx(0.91).epsilon(1e-15));
    CHECK(r.n_population_outcomes == 100);
  }
  SUBCASE("continuous outcomes carry no pass/fail rates") {
    const auto r = empirical_rates(arms_frame({10, 30}, {20}, {}, OutcomeSupport::make(0, 100)));
    CHECK(r.e_y1_w1z1 == 20.0);
    CHECK_FALSE(r.binary());
  }
  SUBCASE("empty arm") {
    CHECK(kind_of([] { empirical_rates(arms_frame({1}, {})); }) == ErrorKind::EmptyArm);
  }
}

TEST_CASE("rates are invariant to row order") {
  const auto f = testutil::synthetic_frame("math_pass");
  std::vector<std::size_t> rows(f.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::mt19937_64 rng(7);
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto a = empirical_rates(f);
  const auto b = empirical_rates(f.subset(rows));
  CHECK(a.e_y1_w1z1 == doctest::Approx(b.e_y1_w1z1).epsilon(1e-15));
  CHECK(a.e_y0_w0z1 == doctest::Approx(b.e_y0_w0z1).epsilon(1e-15));
  CHECK(*a.e_y0_w0z0 == doctest::Approx(*b.e_y0_w0z0).epsilon(1e-15));
  CHECK(design_probs(f, 0.5).p_z1 == design_probs(f.subset(rows), 0.5).p_z1);
}
