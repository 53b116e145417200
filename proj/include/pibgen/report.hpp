#pragma once

// Analysis pipeline: ingest -> propensity -> strata -> lambda -> bounds ->
// point estimates, collected into one JSON document. Markdown and CSV are
// rendered from that document only.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pibgen/bounds.hpp"
#include "pibgen/frame.hpp"

namespace pibgen {

using Json = nlohmann::ordered_json;

enum class OutputFormat { json, csv, md };

struct AnalysisConfig {
  // inputs
  std::string data;
  std::string sample;
  std::string population;
  CsvSchema schema;
  OutcomeSupport support = OutcomeSupport::binary();

  int strata = 5;
  bool merge_strata = false;
  double pw0z0 = 0.5;
  /// Lambda expressions (see parse_lambda_spec). Empty: asmd:max over the
  /// covariates, or sd:pooled when there are none.
  std::vector<std::string> lambdas;
  /// Empty: full, plus reduced when z=0 outcomes are present.
  std::vector<Framework> frameworks;
  /// Empty: worst_case and bsv, plus mtr for binary outcomes.
  std::vector<Assumption> assumptions;
  bool r_code_compat = false;
  bool pooled = false;
  double ridge = 0.0;

  std::uint64_t seed = 1;
  int reps = 1000;
  /// Bootstrap threads. Not echoed into the report: output must not depend on it.
  int threads = 1;
  OutputFormat format = OutputFormat::json;
};

/// Reads a JSON config document. Keys mirror the long CLI flags with '-'
/// replaced by '_'. Unknown keys or wrong types throw BadConfig.
AnalysisConfig config_from_json(const Json& j);
AnalysisConfig config_from_file(const std::string& path);
Json to_json(const AnalysisConfig& config);

Framework parse_framework(std::string_view text);
/// "both" -> {full, reduced}.
std::vector<Framework> parse_frameworks(std::string_view text);
Assumption parse_assumption(std::string_view text);
OutputFormat parse_format(std::string_view text);
OutcomeSupport parse_support(std::string_view text);

/// One-file mode when `data` is set, two-file mode when `sample` and
/// `population` are; anything else is BadConfig.
StudyFrame load_input(const AnalysisConfig& config);

/// Which blocks of the report to compute.
struct Sections {
  bool propensity = false;
  bool balance = false;
  bool lambda = false;
  bool strata = false;
  bool table1 = false;
  bool table2 = false;
  bool table3 = false;

  static Sections all();
};

/// Blocks: config, data, then the requested ones, then ledger.
Json run_analysis(const StudyFrame& frame, const AnalysisConfig& config, const Sections& sections);

/// Two decimals for bounds and balance, the stored display string for point
/// estimates.
std::string render_markdown(const Json& report);
std::string render_csv(const Json& report);
std::string render(const Json& report, OutputFormat format);

}  // namespace pibgen
