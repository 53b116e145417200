#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pibgen/frame.hpp"

namespace pibgen {

struct FitOptions {
  /// Euclidean norm of the gradient of the mean log-likelihood, on the
  /// standardized scale.
  double tolerance = 1e-8;
  int max_iter = 100;
  /// L2 penalty on standardized slopes (intercept unpenalized).
  double ridge = 0.0;
};

/// Logistic sampling-propensity model: logit s(X) = intercept + sum b_j x_j,
/// coefficients on the original covariate scale.
struct PropensityModel {
  double intercept = 0.0;
  std::vector<std::pair<std::string, double>> coefficients;
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;

  std::optional<double> coefficient(std::string_view name) const;
};

/// Newton/IRLS maximum likelihood of z on the named covariates (empty list =
/// intercept-only). Covariates are standardized internally.
///
/// Errors: SingularDesign (constant or collinear covariates), Separation
/// (likelihood unbounded; the message names the diverging direction),
/// (also when z is constant), NoConvergence, UnknownCovariate.
PropensityModel fit_propensity(const StudyFrame& frame, std::span<const std::string> covariates,
                               const FitOptions& options = {});

/// Per-unit linear predictor. Throws MissingCovariate if the frame lacks a
/// model covariate.
std::vector<double> logit_scores(const PropensityModel& model, const StudyFrame& frame);
std::vector<double> propensity_scores(const PropensityModel& model, const StudyFrame& frame);

double inverse_logit(double eta);

/// Binomial log-likelihood of z on the original covariate scale. Parameter
/// vector layout: [intercept, b_1, ..., b_p].
class LogisticLikelihood {
 public:
  LogisticLikelihood(const StudyFrame& frame, std::span<const std::string> covariates);

  std::size_t dimension() const { return columns_.size() + 1; }
  double value(std::span<const double> beta) const;
  std::vector<double> gradient(std::span<const double> beta) const;

 private:
  std::vector<double> eta(std::span<const double> beta) const;

  std::vector<std::vector<double>> columns_;
  std::vector<double> z_;
};

nlohmann::ordered_json to_json(const PropensityModel& model);
PropensityModel propensity_model_from_json(const nlohmann::ordered_json& j);

// ---------------------------------------------------------------------------
// Balance

struct CovariateBalance {
  std::string name;
  double sample_mean = 0.0;
  double population_mean = 0.0;
  /// Denominator-N standard deviation over every unit in the frame.
  double population_sd = 0.0;
  /// Absent when population_sd is zero.
  std::optional<double> asmd;
};

struct BalanceReport {
  std::vector<CovariateBalance> rows;

  const CovariateBalance* find(std::string_view name) const;
};

/// |mu_P - mean_S| / sigma_P. Throws ZeroVariance, UnknownCovariate,
/// EmptySample.
double asmd(const StudyFrame& frame, std::string_view covariate);

BalanceReport balance_report(const StudyFrame& frame, std::span<const std::string> covariates);

}  // namespace pibgen
