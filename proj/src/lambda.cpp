#include "pibgen/lambda.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "csv.hpp"
#include "pibgen/error.hpp"

namespace pibgen {

LambdaSpec LambdaSpec::fixed(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::NegativeLambda, "fixed lambda must be a finite value >= 0");
  }
  LambdaSpec s;
  s.mode = Mode::fixed;
  s.value = value;
  return s;
}

LambdaSpec LambdaSpec::asmd(std::vector<std::string> covariates, AsmdAggregate aggregate) {
  LambdaSpec s;
  s.mode = Mode::asmd;
  s.covariates = std::move(covariates);
  s.aggregate = aggregate;
  return s;
}

LambdaSpec LambdaSpec::outcome_sd(double multiplier, ArmRule rule) {
  if (!(multiplier >= 0.0) || !std::isfinite(multiplier)) {
    throw Error(ErrorKind::NegativeLambda, "outcome SD multiplier must be >= 0");
  }
  LambdaSpec s;
  s.mode = Mode::outcome_sd;
  s.multiplier = multiplier;
  s.arm_rule = rule;
  return s;
}

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.emplace_back(csv::trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void bad_spec(std::string_view text) {
  throw Error(ErrorKind::BadConfig, "cannot parse lambda expression '" + std::string(text) + "'");
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

LambdaSpec parse_lambda_spec(std::string_view text) {
  const auto trimmed = csv::trim(text);
  if (const auto v = csv::parse_double(trimmed)) return LambdaSpec::fixed(*v);
  const auto parts = split(trimmed, ':');
  if (parts.empty()) bad_spec(text);
  if (parts[0] == "asmd") {
    if (parts.size() != 3) bad_spec(text);
    AsmdAggregate agg;
    if (parts[1] == "max") {
      agg = AsmdAggregate::max;
    } else if (parts[1] == "mean") {
      agg = AsmdAggregate::mean;
    } else if (parts[1] == "single") {
      agg = AsmdAggregate::single;
    } else {
      bad_spec(text);
    }
    auto covs = split(parts[2], ',');
    if (std::any_of(covs.begin(), covs.end(), [](const auto& c) { return c.empty(); })) {
      bad_spec(text);
    }
    if (agg == AsmdAggregate::single && covs.size() != 1) bad_spec(text);
    return LambdaSpec::asmd(std::move(covs), agg);
  }
  if (parts[0] == "sd") {
    if (parts.size() < 2 || parts.size() > 3) bad_spec(text);
    ArmRule rule;
    if (parts[1] == "pooled") {
      rule = ArmRule::pooled;
    } else if (parts[1] == "max_arm") {
      rule = ArmRule::max_arm;
    } else {
      bad_spec(text);
    }
    double mult = 2.0;
    if (parts.size() == 3) {
      const auto m = csv::parse_double(parts[2]);
      if (!m) bad_spec(text);
      mult = *m;
    }
    return LambdaSpec::outcome_sd(mult, rule);
  }
  bad_spec(text);
}

std::string to_string(const LambdaSpec& spec) {
  switch (spec.mode) {
    case LambdaSpec::Mode::fixed:
      return format_number(spec.value);
    case LambdaSpec::Mode::asmd: {
      std::string s = "asmd:";
      s += spec.aggregate == AsmdAggregate::max    ? "max"
           : spec.aggregate == AsmdAggregate::mean ? "mean"
                                                   : "single";
      s += ':';
      for (std::size_t i = 0; i < spec.covariates.size(); ++i) {
        if (i) s += ',';
        s += spec.covariates[i];
      }
      return s;
    }
    case LambdaSpec::Mode::outcome_sd: {
      std::string s = spec.arm_rule == ArmRule::pooled ? "sd:pooled" : "sd:max_arm";
      if (spec.multiplier != 2.0) s += ":" + format_number(spec.multiplier);
      return s;
    }
  }
  return {};
}

double sample_outcome_variance(const StudyFrame& frame, std::optional<int> arm) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& u : frame.units()) {
    if (u.z != 1 || (arm && *u.w != *arm)) continue;
    sum += *u.y;
    ++n;
  }
  if (n == 0) {
    if (arm) throw Error(ErrorKind::EmptyArm, "no sampled units in arm " + std::to_string(*arm));
    throw Error(ErrorKind::EmptySample, "no sampled units");
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& u : frame.units()) {
    if (u.z != 1 || (arm && *u.w != *arm)) continue;
    ss += (*u.y - mean) * (*u.y - mean);
  }
  return ss / static_cast<double>(n);
}

double resolve_lambda(const LambdaSpec& spec, const StudyFrame& frame,
                      const BalanceReport& balance) {
  switch (spec.mode) {
    case LambdaSpec::Mode::fixed:
      return spec.value;
    case LambdaSpec::Mode::asmd: {
      if (spec.covariates.empty()) throw Error(ErrorKind::BadConfig, "asmd rule needs covariates");
      if (spec.aggregate == AsmdAggregate::single && spec.covariates.size() != 1) {
        throw Error(ErrorKind::BadConfig, "asmd:single takes exactly one covariate");
      }
      std::vector<double> values;
      for (const auto& name : spec.covariates) {
        const auto* row = balance.find(name);
        if (!row) throw Error(ErrorKind::UnknownCovariate, "no balance row for '" + name + "'");
        if (!row->asmd) {
          throw Error(ErrorKind::ZeroVariance, "covariate '" + name + "' has zero population variance");
        }
        values.push_back(*row->asmd);
      }
      if (spec.aggregate == AsmdAggregate::mean) {
        double s = 0.0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
      }
      return *std::max_element(values.begin(), values.end());
    }
    case LambdaSpec::Mode::outcome_sd: {
      double var = 0.0;
      if (spec.arm_rule == ArmRule::pooled) {
        var = sample_outcome_variance(frame);
      } else {
        var = std::max(sample_outcome_variance(frame, 1), sample_outcome_variance(frame, 0));
      }
      return spec.multiplier * std::sqrt(var);
    }
  }
  return 0.0;
}

std::vector<LambdaCandidate> lambda_report(const StudyFrame& frame, const BalanceReport& balance,
                                           double multiplier) {
  std::vector<LambdaCandidate> rows;
  std::vector<std::string> usable;
  for (const auto& b : balance.rows) {
    if (!b.asmd) continue;
    usable.push_back(b.name);
    rows.push_back({"asmd:single:" + b.name, *b.asmd});
  }
  if (!usable.empty()) {
    for (auto agg : {AsmdAggregate::mean, AsmdAggregate::max}) {
      const auto spec = LambdaSpec::asmd(usable, agg);
      rows.push_back({to_string(spec), resolve_lambda(spec, frame, balance)});
    }
  }
  for (auto rule : {ArmRule::pooled, ArmRule::max_arm}) {
    const auto spec = LambdaSpec::outcome_sd(multiplier, rule);
    rows.push_back({to_string(spec), resolve_lambda(spec, frame, balance)});
  }
  return rows;
}

}  // namespace pibgen
