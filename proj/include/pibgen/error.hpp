#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pibgen {

enum class ErrorKind {
  // ingestion
  Io,
  MissingColumn,
  BadIndicator,
  BadNumber,
  OutcomeOutOfSupport,
  MissingCovariate,
  MissingSampleValue,
  // design / rates
  EmptySample,
  EmptyArm,
  NonBinaryOutcome,
  MissingPopulationOutcome,
  // propensity
  Separation,
  NoConvergence,
  SingularDesign,
  ZeroVariance,
  // strata / estimators
  TooManyStrata,
  NonViableStratum,
  ZeroPropensity,
  UnfittedModel,
  // oracle
  TooLarge,
  ObservedViolation,
  // configuration
  InvalidSupport,
  NegativeLambda,
  UnknownCovariate,
  BadConfig,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

/// Configuration errors map to CLI exit code 3, everything else to 2.
bool is_config_error(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  Error(ErrorKind kind, const std::string& message, std::size_t row);
  Error(ErrorKind kind, const std::string& message, std::size_t row, std::string column);

  ErrorKind kind() const noexcept { return kind_; }
  /// 1-based data row (header excluded), when the error is tied to one.
  std::optional<std::size_t> row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> row_;
  std::string column_;
};

}  // namespace pibgen
