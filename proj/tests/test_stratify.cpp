#include <doctest.h>

#include <numeric>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "pibgen/error.hpp"
#include "pibgen/propensity.hpp"
#include "pibgen/stratify.hpp"

using namespace pibgen;
using testutil::unit;

TEST_CASE("one stratum holds everything") {
  const std::vector<double> logits{0.3, -1.0, 2.0, 0.3};
  const auto a = make_strata(logits, 1);
  CHECK(a.k == 1);
  CHECK(a.breakpoints.empty());
  CHECK(a.counts[0].population == 4);
  CHECK(a.logit_range[0] == std::pair<double, double>{-1.0, 2.0});
  for (int s : a.stratum_of) CHECK(s == 0);
}

TEST_CASE("nine evenly spaced logits in three strata") {
  const std::vector<double> logits{9, 1, 5, 2, 8, 3, 7, 4, 6};
  const auto a = make_strata(logits, 3);
  CHECK(a.breakpoints == std::vector<double>{3.0, 6.0});
  for (const auto& c : a.counts) CHECK(c.population == 3);
  for (std::size_t i = 0; i < logits.size(); ++i) CHECK(a.stratum_of[i] == static_cast<int>((logits[i] - 1) / 3));
  CHECK(a.logit_range[0] == std::pair<double, double>{1.0, 3.0});
  CHECK(a.logit_range[2] == std::pair<double, double>{6.0, 9.0});
}

TEST_CASE("ties at a cut go to the lower stratum") {
  const std::vector<double> logits{1, 2, 2, 2, 3, 4};
  const auto a = make_strata(logits, 2);
  REQUIRE(a.breakpoints == std::vector<double>{2.0});
  CHECK(a.counts[0].population == 4);
  CHECK(a.counts[1].population == 2);
}

TEST_CASE("too many strata") {
  const std::vector<double> logits{1, 1, 2, 2};
  CHECK(make_strata(logits, 2).k == 2);
  try {
    make_strata(logits, 3);
    FAIL("expected TooManyStrata");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooManyStrata);
  }
}

TEST_CASE("five strata on the synthetic frame") {
  const auto f = testutil::synthetic_frame();
  const auto m = fit_propensity(f, f.covariate_names());
  const auto logits = logit_scores(m, f);
  const auto a = make_strata(f, logits, 3);
  for (const auto& c : a.counts) CHECK(c.population == 343);

  const auto b = make_strata(f, logits, 5);
  std::size_t pop = 0, treated = 0, control = 0;
  for (const auto& c : b.counts) {
    pop += c.population;
    treated += c.sample_treated;
    control += c.sample_control;
  }
  CHECK(pop == 1029);
  CHECK(treated == 34);
  CHECK(control == 22);

  SUBCASE("stratum frames partition the units") {
    const auto frames = stratum_frames(f, b);
    REQUIRE(frames.frames.size() == 5);
    std::set<std::string> ids;
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(frames.frames[j].size() == b.counts[j].population);
      CHECK(frames.viable[j] == b.counts[j].viable());
      for (const auto& u : frames.frames[j].units()) ids.insert(u.id);
    }
    CHECK(ids.size() == 1029);
  }
}

TEST_CASE("merging non-viable strata") {
  // logits 1..8 in pairs; the two lowest strata each lack a control
  std::vector<UnitRecord> units;
  for (int i = 1; i <= 8; ++i) {
    if (i == 1) {
      units.push_back(unit("a", 1, 1, 1.0));
    } else if (i == 4 || i == 6 || i == 7) {
      units.push_back(unit("t" + std::to_string(i), 1, 1, 1.0));
    } else if (i == 5 || i == 8) {
      units.push_back(unit("c" + std::to_string(i), 1, 0, 0.0));
    } else {
      units.push_back(unit("p" + std::to_string(i), 0, std::nullopt, std::nullopt));
    }
  }
  const StudyFrame f(units, OutcomeSupport::binary(), {});
  std::vector<double> logits(8);
  std::iota(logits.begin(), logits.end(), 1.0);
  const auto a = make_strata(f, logits, 4);
  REQUIRE_FALSE(a.counts[0].viable());
  CHECK(a.counts[1].viable() == false);
  CHECK(a.counts[2].viable());
  CHECK(a.counts[3].viable());

  std::vector<std::string> notes;
  const auto m = merge_nonviable(f, a, notes);
  CHECK(m.k == 2);
  for (const auto& c : m.counts) CHECK(c.viable());
  CHECK(m.counts[0].population + m.counts[1].population == 8);
  CHECK(notes.size() == 2);
  CHECK(notes[0] == "merged non-viable stratum 1 into stratum 2");
  CHECK(m.logit_range.front().first == 1.0);
  CHECK(m.logit_range.back().second == 8.0);
  CHECK(m.breakpoints.size() == 1);
}

TEST_CASE("summary CSV") {
  const StudyFrame f({unit("a", 1, 1, 1.0), unit("b", 1, 0, 0.0), unit("c", 0, std::nullopt, std::nullopt),
                      unit("d", 0, std::nullopt, std::nullopt)},
                     OutcomeSupport::binary(), {});
  const std::vector<double> logits{0.5, -0.5, 1.5, 2.5};
  std::ostringstream os;
  write_stratum_summary(os, make_strata(f, logits, 2));
  CHECK(os.str() ==
        "stratum,logit_lo,logit_hi,n_population,n_treated,n_control,viable\n"
        "1,-0.5,0.5,2,1,1,true\n"
        "2,0.5,2.5,2,0,0,false\n");
}
