#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pibgen/frame.hpp"

namespace testutil {

inline pibgen::StudyFrame csv_frame(const std::string& text,
                                    pibgen::OutcomeSupport support = pibgen::OutcomeSupport::binary(),
                                    const pibgen::CsvSchema& schema = {}) {
  std::istringstream in(text);
  return pibgen::load_frame(in, schema, support);
}

inline pibgen::UnitRecord unit(std::string id, int z, std::optional<int> w, std::optional<double> y,
                               std::vector<double> x = {}) {
  pibgen::UnitRecord u;
  u.id = std::move(id);
  u.z = z;
  u.w = w;
  u.y = y;
  u.x = std::move(x);
  return u;
}

// Sampled arms plus z=0 units (nullopt = no outcome), no covariates.
inline pibgen::StudyFrame arms_frame(const std::vector<double>& treated, const std::vector<double>& control,
                                     const std::vector<std::optional<double>>& others = {},
                                     pibgen::OutcomeSupport support = pibgen::OutcomeSupport::binary()) {
  std::vector<pibgen::UnitRecord> units;
  int k = 0;
  for (double y : treated) units.push_back(unit("t" + std::to_string(++k), 1, 1, y));
  for (double y : control) units.push_back(unit("c" + std::to_string(++k), 1, 0, y));
  for (const auto& y : others) units.push_back(unit("p" + std::to_string(++k), 0, std::nullopt, y));
  return pibgen::StudyFrame(std::move(units), support, {});
}

inline std::string data_path(const std::string& name) { return std::string(PIBGEN_DATA_DIR) + "/" + name; }

inline pibgen::StudyFrame synthetic_frame(const std::string& outcome = "ela_pass") {
  pibgen::CsvSchema schema;
  schema.outcome_col = outcome;
  schema.covariates = {"pretest", "title1", "enrollment", "frl_pct"};
  return pibgen::load_frame_file(data_path("indiana_synthetic.csv"), schema,
                                 pibgen::OutcomeSupport::binary());
}

// z ~ Bernoulli(expit(b0 + b1 x1)), x1 ~ N(0, 1); portable draws from the
// raw generator so the frame does not depend on the standard library.
inline pibgen::StudyFrame logistic_frame(std::size_t n, double b0, double b1, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) / 9007199254740992.0; };
  std::vector<pibgen::UnitRecord> units;
  units.reserve(n);
  int arm = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double x = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    const bool sampled = uniform() < 1.0 / (1.0 + std::exp(-(b0 + b1 * x)));
    if (sampled) {
      units.push_back(unit("u" + std::to_string(i), 1, arm, 1.0, {x}));
      arm = 1 - arm;
    } else {
      units.push_back(unit("u" + std::to_string(i), 0, std::nullopt, std::nullopt, {x}));
    }
  }
  return pibgen::StudyFrame(std::move(units), pibgen::OutcomeSupport::binary(), {"x1"});
}

}  // namespace testutil
