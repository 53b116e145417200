#include "pibgen/error.hpp"

namespace pibgen {

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "Io";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::BadIndicator: return "BadIndicator";
    case ErrorKind::BadNumber: return "BadNumber";
    case ErrorKind::OutcomeOutOfSupport: return "OutcomeOutOfSupport";
    case ErrorKind::MissingCovariate: return "MissingCovariate";
    case ErrorKind::MissingSampleValue: return "MissingSampleValue";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::EmptyArm: return "EmptyArm";
    case ErrorKind::NonBinaryOutcome: return "NonBinaryOutcome";
    case ErrorKind::MissingPopulationOutcome: return "MissingPopulationOutcome";
    case ErrorKind::Separation: return "Separation";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::TooManyStrata: return "TooManyStrata";
    case ErrorKind::NonViableStratum: return "NonViableStratum";
    case ErrorKind::ZeroPropensity: return "ZeroPropensity";
    case ErrorKind::UnfittedModel: return "UnfittedModel";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::ObservedViolation: return "ObservedViolation";
    case ErrorKind::InvalidSupport: return "InvalidSupport";
    case ErrorKind::NegativeLambda: return "NegativeLambda";
    case ErrorKind::UnknownCovariate: return "UnknownCovariate";
    case ErrorKind::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

bool is_config_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidSupport:
    case ErrorKind::NegativeLambda:
    case ErrorKind::UnknownCovariate:
    case ErrorKind::BadConfig:
      return true;
    default:
      return false;
  }
}

namespace {

std::string decorate(ErrorKind kind, const std::string& message) {
  std::string out(error_kind_name(kind));
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(decorate(kind, message)), kind_(kind) {}

Error::Error(ErrorKind kind, const std::string& message, std::size_t row)
    : std::runtime_error(decorate(kind, message + " (row " + std::to_string(row) + ")")),
      kind_(kind),
      row_(row) {}

Error::Error(ErrorKind kind, const std::string& message, std::size_t row, std::string column)
    : std::runtime_error(decorate(
          kind, message + " (row " + std::to_string(row) + ", column '" + column + "')")),
      kind_(kind),
      row_(row),
      column_(std::move(column)) {}

}  // namespace pibgen
