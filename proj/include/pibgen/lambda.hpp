#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pibgen/frame.hpp"
#include "pibgen/propensity.hpp"

namespace pibgen {

enum class AsmdAggregate { max, mean, single };
enum class ArmRule { pooled, max_arm };

/// How the bounded-sample-variation parameter is chosen.
///
///   fixed       a user value >= 0
///   asmd        aggregate of covariate ASMDs (max, mean, or a single one)
///   outcome_sd  multiplier * sqrt(Var(Y|Z=1)), pooled over the sample or the
///               larger of the two arm variances
///
/// Text form (CLI): "0.3", "asmd:max:pretest,size", "asmd:mean:a,b",
/// "asmd:single:pretest", "sd:pooled", "sd:max_arm", "sd:pooled:1.5".
struct LambdaSpec {
  enum class Mode { fixed, asmd, outcome_sd };

  Mode mode = Mode::fixed;
  double value = 0.0;
  std::vector<std::string> covariates;
  AsmdAggregate aggregate = AsmdAggregate::max;
  double multiplier = 2.0;
  ArmRule arm_rule = ArmRule::pooled;

  static LambdaSpec fixed(double value);
  static LambdaSpec asmd(std::vector<std::string> covariates, AsmdAggregate aggregate);
  static LambdaSpec outcome_sd(double multiplier, ArmRule rule);
};

/// Throws BadConfig on malformed text, NegativeLambda on a negative number.
LambdaSpec parse_lambda_spec(std::string_view text);
std::string to_string(const LambdaSpec& spec);

/// Denominator-n variance of sampled outcomes; `arm` restricts to W=arm.
double sample_outcome_variance(const StudyFrame& frame, std::optional<int> arm = std::nullopt);

/// Errors: UnknownCovariate (not in the balance report), ZeroVariance,
/// BadConfig (single aggregate over several covariates).
double resolve_lambda(const LambdaSpec& spec, const StudyFrame& frame,
                      const BalanceReport& balance);

struct LambdaCandidate {
  std::string rule;  // parseable by parse_lambda_spec
  double value = 0.0;
};

/// Every rule's value side by side: one ASMD row per covariate with nonzero
/// population variance, their mean and max, then pooled and max-arm outcome
/// SD rows (multiplier applied).
std::vector<LambdaCandidate> lambda_report(const StudyFrame& frame, const BalanceReport& balance,
                                           double multiplier = 2.0);

}  // namespace pibgen
