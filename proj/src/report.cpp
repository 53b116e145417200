#include "pibgen/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "pibgen/error.hpp"
#include "pibgen/estimators.hpp"
#include "pibgen/lambda.hpp"
#include "pibgen/propensity.hpp"
#include "pibgen/stratify.hpp"

namespace pibgen {

// ---------------------------------------------------------------------------
// config

Framework parse_framework(std::string_view text) {
  if (text == "full") return Framework::full;
  if (text == "reduced") return Framework::reduced;
  throw Error(ErrorKind::BadConfig, "unknown framework '" + std::string(text) + "'");
}

std::vector<Framework> parse_frameworks(std::string_view text) {
  if (text == "both") return {Framework::full, Framework::reduced};
  return {parse_framework(text)};
}

Assumption parse_assumption(std::string_view text) {
  if (text == "worst" || text == "worst_case") return Assumption::worst_case;
  if (text == "bsv") return Assumption::bsv;
  if (text == "mtr") return Assumption::mtr;
  throw Error(ErrorKind::BadConfig, "unknown assumption '" + std::string(text) + "'");
}

OutputFormat parse_format(std::string_view text) {
  if (text == "json") return OutputFormat::json;
  if (text == "csv") return OutputFormat::csv;
  if (text == "md" || text == "markdown") return OutputFormat::md;
  throw Error(ErrorKind::BadConfig, "unknown format '" + std::string(text) + "'");
}

OutcomeSupport parse_support(std::string_view text) {
  const auto comma = text.find(',');
  if (comma == std::string_view::npos) {
    throw Error(ErrorKind::InvalidSupport, "support must be 'lo,hi'");
  }
  const auto lo = csv::parse_double(csv::trim(text.substr(0, comma)));
  const auto hi = csv::parse_double(csv::trim(text.substr(comma + 1)));
  if (!lo || !hi) throw Error(ErrorKind::InvalidSupport, "support must be 'lo,hi'");
  return OutcomeSupport::make(*lo, *hi);
}

namespace {

std::string_view format_name(OutputFormat f) {
  switch (f) {
    case OutputFormat::json: return "json";
    case OutputFormat::csv: return "csv";
    case OutputFormat::md: return "md";
  }
  return "json";
}

std::vector<std::string> string_list(const Json& v) {
  if (v.is_string()) {
    std::vector<std::string> out;
    std::string_view s = v.get_ref<const std::string&>();
    std::size_t start = 0;
    for (;;) {
      const auto pos = s.find(',', start);
      auto item = csv::trim(s.substr(start, pos - start));
      if (!item.empty()) out.emplace_back(item);
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    return out;
  }
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(e.is_string() ? e.get<std::string>() : e.dump());
  return out;
}

void validate(const AnalysisConfig& c) {
  if (c.strata < 1) throw Error(ErrorKind::BadConfig, "strata must be >= 1");
  if (c.reps < 2) throw Error(ErrorKind::BadConfig, "reps must be >= 2");
  if (c.threads < 1) throw Error(ErrorKind::BadConfig, "threads must be >= 1");
  if (!(c.pw0z0 >= 0.0 && c.pw0z0 <= 1.0)) {
    throw Error(ErrorKind::BadConfig, "pw0z0 must lie in [0, 1]");
  }
  if (!(c.ridge >= 0.0)) throw Error(ErrorKind::BadConfig, "ridge must be >= 0");
}

}  // namespace

AnalysisConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::BadConfig, "config must be a JSON object");
  AnalysisConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "data") {
        c.data = v.get<std::string>();
      } else if (key == "sample") {
        c.sample = v.get<std::string>();
      } else if (key == "population") {
        c.population = v.get<std::string>();
      } else if (key == "id_col") {
        c.schema.id_col = v.get<std::string>();
      } else if (key == "sample_col") {
        c.schema.sample_col = v.get<std::string>();
      } else if (key == "treatment_col") {
        c.schema.treatment_col = v.get<std::string>();
      } else if (key == "outcome_col") {
        c.schema.outcome_col = v.get<std::string>();
      } else if (key == "covariates") {
        c.schema.covariates = string_list(v);
      } else if (key == "exclude") {
        c.schema.exclude = string_list(v);
      } else if (key == "categorical") {
        for (const auto& [col, ref] : v.items()) c.schema.categorical[col] = ref.get<std::string>();
      } else if (key == "support") {
        c.support = v.is_string() ? parse_support(v.get<std::string>())
                                  : OutcomeSupport::make(v.at(0).get<double>(), v.at(1).get<double>());
      } else if (key == "strata") {
        c.strata = v.get<int>();
      } else if (key == "merge_strata") {
        c.merge_strata = v.get<bool>();
      } else if (key == "pw0z0") {
        c.pw0z0 = v.get<double>();
      } else if (key == "lambda") {
        c.lambdas = v.is_array() ? string_list(v)
                                 : std::vector<std::string>{v.is_string() ? v.get<std::string>() : v.dump()};
      } else if (key == "framework") {
        c.frameworks.clear();
        for (const auto& f : v.is_array() ? string_list(v) : std::vector{v.get<std::string>()}) {
          for (auto fw : parse_frameworks(f)) c.frameworks.push_back(fw);
        }
      } else if (key == "assumption") {
        c.assumptions.clear();
        for (const auto& a : v.is_array() ? string_list(v) : std::vector{v.get<std::string>()}) {
          c.assumptions.push_back(parse_assumption(a));
        }
      } else if (key == "r_code_compat") {
        c.r_code_compat = v.get<bool>();
      } else if (key == "pooled") {
        c.pooled = v.get<bool>();
      } else if (key == "ridge") {
        c.ridge = v.get<double>();
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "reps") {
        c.reps = v.get<int>();
      } else if (key == "threads") {
        c.threads = v.get<int>();
      } else if (key == "format") {
        c.format = parse_format(v.get<std::string>());
      } else {
        throw Error(ErrorKind::BadConfig, "unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("malformed config: ") + e.what());
  }
  validate(c);
  return c;
}

AnalysisConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::BadConfig, "cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadConfig, "config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

Json to_json(const AnalysisConfig& c) {
  Json j;
  if (!c.data.empty()) j["data"] = c.data;
  if (!c.sample.empty()) j["sample"] = c.sample;
  if (!c.population.empty()) j["population"] = c.population;
  j["id_col"] = c.schema.id_col;
  j["sample_col"] = c.schema.sample_col;
  j["treatment_col"] = c.schema.treatment_col;
  j["outcome_col"] = c.schema.outcome_col;
  j["covariates"] = c.schema.covariates;
  if (!c.schema.exclude.empty()) j["exclude"] = c.schema.exclude;
  if (!c.schema.categorical.empty()) {
    Json cat = Json::object();
    for (const auto& [col, ref] : c.schema.categorical) cat[col] = ref;
    j["categorical"] = cat;
  }
  j["support"] = {c.support.lo, c.support.hi};
  j["strata"] = c.strata;
  j["merge_strata"] = c.merge_strata;
  j["pw0z0"] = c.pw0z0;
  j["lambda"] = c.lambdas;
  Json fw = Json::array();
  for (auto f : c.frameworks) fw.push_back(to_string(f));
  j["framework"] = fw;
  Json as = Json::array();
  for (auto a : c.assumptions) as.push_back(to_string(a));
  j["assumption"] = as;
  j["r_code_compat"] = c.r_code_compat;
  j["pooled"] = c.pooled;
  j["ridge"] = c.ridge;
  j["seed"] = c.seed;
  j["reps"] = c.reps;
  j["format"] = format_name(c.format);
  return j;
}

StudyFrame load_input(const AnalysisConfig& c) {
  const bool one = !c.data.empty();
  const bool two = !c.sample.empty() || !c.population.empty();
  if (one && two) {
    throw Error(ErrorKind::BadConfig, "use either --data or --sample/--population, not both");
  }
  if (one) return load_frame_file(c.data, c.schema, c.support);
  if (c.sample.empty() || c.population.empty()) {
    throw Error(ErrorKind::BadConfig, "two-file mode needs both --sample and --population");
  }
  return load_two_files(c.sample, c.population, c.schema, c.support);
}

Sections Sections::all() { return {true, true, true, true, true, true, true}; }

// ---------------------------------------------------------------------------
// pipeline

namespace {

struct ResolvedLambda {
  std::string rule;
  double value = 0.0;
};

struct Summary {
  double min = 0.0, mean = 0.0, max = 0.0;
};

Json summary_json(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  double lo = v.front(), hi = v.front(), sum = 0.0;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    sum += x;
  }
  return Json{{"min", lo}, {"mean", sum / static_cast<double>(v.size())}, {"max", hi}};
}

Json interval_entry(const PateInterval& iv, const std::optional<ResolvedLambda>& lambda) {
  Json j = to_json(iv);
  if (lambda) j["lambda_rule"] = lambda->rule;
  return j;
}

Json skipped_entry(Assumption a, Framework f, const std::optional<ResolvedLambda>& lambda,
                   std::optional<MtrVariant> variant, const std::string& why) {
  Json j;
  j["assumption"] = to_string(a);
  j["framework"] = to_string(f);
  if (lambda) j["lambda"] = lambda->value;
  if (variant) j["variant"] = to_string(*variant);
  j["skipped"] = why;
  if (lambda) j["lambda_rule"] = lambda->rule;
  return j;
}

std::string entry_name(const Json& e) {
  std::string s = e["assumption"].get<std::string>() + "/" + e["framework"].get<std::string>();
  if (e.contains("lambda_rule")) s += "/lambda=" + e["lambda_rule"].get<std::string>();
  if (e.contains("variant")) s += "/" + e["variant"].get<std::string>();
  return s;
}

void note_clamps(const Json& e, const std::string& where, Json& clamped) {
  if (!e.contains("clamped")) return;
  const bool lo = e["clamped"]["lo"].get<bool>();
  const bool hi = e["clamped"]["hi"].get<bool>();
  if (!lo && !hi) return;
  clamped.push_back(where + " " + entry_name(e) + (lo && hi ? " (lo, hi)" : lo ? " (lo)" : " (hi)"));
}

struct Request {
  Assumption assumption;
  Framework framework;
  std::optional<ResolvedLambda> lambda;
};

}  // namespace

Json run_analysis(const StudyFrame& frame, const AnalysisConfig& config, const Sections& sections) {
  validate(config);
  Json out;
  out["config"] = to_json(config);

  const DesignProbs probs = design_probs(frame, config.pw0z0);
  const EmpiricalRates rates = empirical_rates(frame);
  const OutcomeSupport& support = frame.support();
  const auto& covariates = frame.covariate_names();

  Json notes = Json::array();
  Json clamped = Json::array();

  {
    Json d;
    d["n_units"] = frame.size();
    d["n_sample"] = frame.sample_size();
    d["n_treated"] = rates.n_treated;
    d["n_control"] = rates.n_control;
    d["n_population_outcomes"] = rates.n_population_outcomes;
    d["binary_outcome"] = frame.binary_outcomes();
    d["support"] = {support.lo, support.hi};
    d["covariates"] = covariates;
    d["p_z1"] = probs.p_z1;
    d["p_w1_given_z1"] = probs.p_w1_given_z1;
    d["p_w0_given_z0"] = probs.p_w0_given_z0;
    d["e_y1_w1z1"] = rates.e_y1_w1z1;
    d["e_y0_w0z1"] = rates.e_y0_w0z1;
    d["e_y0_w0z0"] = rates.e_y0_w0z0 ? Json(*rates.e_y0_w0z0) : Json(nullptr);
    out["data"] = d;
  }
  notes.push_back("P(W=0|Z=0) = " + Json(config.pw0z0).dump() + " is assumed, not estimated");

  // assumptions and frameworks
  std::vector<Assumption> assumptions = config.assumptions;
  if (assumptions.empty()) {
    assumptions = {Assumption::worst_case, Assumption::bsv};
    if (frame.binary_outcomes()) {
      assumptions.push_back(Assumption::mtr);
    } else {
      notes.push_back("monotone treatment response skipped: outcome is not binary");
    }
  }
  std::vector<Framework> frameworks = config.frameworks;
  if (frameworks.empty()) {
    frameworks = {Framework::full};
    if (rates.e_y0_w0z0) {
      frameworks.push_back(Framework::reduced);
    } else {
      notes.push_back("reduced framework skipped: no outcomes for z=0 units");
    }
  }
  const bool wants_bsv =
      std::find(assumptions.begin(), assumptions.end(), Assumption::bsv) != assumptions.end();

  // balance and lambda
  const bool need_lambda = sections.lambda || ((sections.table1 || sections.table2) && wants_bsv);
  const BalanceReport balance = balance_report(frame, covariates);
  std::vector<ResolvedLambda> lambdas;
  if (need_lambda) {
    std::vector<std::string> specs = config.lambdas;
    if (specs.empty()) {
      std::vector<std::string> usable;
      for (const auto& b : balance.rows) {
        if (b.asmd) usable.push_back(b.name);
      }
      specs.push_back(usable.empty() ? to_string(LambdaSpec::outcome_sd(2.0, ArmRule::pooled))
                                     : to_string(LambdaSpec::asmd(usable, AsmdAggregate::max)));
      notes.push_back("lambda defaulted to " + specs.back());
    }
    for (const auto& s : specs) {
      const LambdaSpec spec = parse_lambda_spec(s);
      lambdas.push_back({to_string(spec), resolve_lambda(spec, frame, balance)});
    }
  }

  if (sections.balance) {
    Json rows = Json::array();
    for (const auto& b : balance.rows) {
      Json r;
      r["covariate"] = b.name;
      r["sample_mean"] = b.sample_mean;
      r["population_mean"] = b.population_mean;
      r["population_sd"] = b.population_sd;
      r["asmd"] = b.asmd ? Json(*b.asmd) : Json(nullptr);
      rows.push_back(r);
    }
    out["balance"] = rows;
  }
  if (sections.lambda) {
    Json l;
    Json cands = Json::array();
    for (const auto& c : lambda_report(frame, balance)) {
      cands.push_back({{"rule", c.rule}, {"value", c.value}});
    }
    l["candidates"] = cands;
    Json sel = Json::array();
    for (const auto& r : lambdas) {
      sel.push_back({{"rule", r.rule},
                     {"value", r.value},
                     {"improves", bsv_improves(rates, r.value, support)}});
    }
    l["selected"] = sel;
    out["lambda"] = l;
  }

  // propensity and strata
  const bool need_model = sections.propensity || sections.strata || sections.table2 || sections.table3;
  const bool need_strata = sections.strata || sections.table2 || sections.table3;
  PropensityModel model;
  std::vector<double> logits;
  StratumAssignment assignment;
  if (need_model) {
    FitOptions fit;
    fit.ridge = config.ridge;
    model = fit_propensity(frame, covariates, fit);
    logits = logit_scores(model, frame);
  }
  if (sections.propensity) {
    Json p;
    p["model"] = to_json(model);
    p["final_gradient_norm"] = model.final_gradient_norm;
    std::vector<double> in_sample, outside;
    const auto scores = propensity_scores(model, frame);
    for (std::size_t i = 0; i < frame.size(); ++i) {
      (frame.units()[i].z == 1 ? in_sample : outside).push_back(scores[i]);
    }
    p["scores"] = {{"sample", summary_json(in_sample)}, {"non_sampled", summary_json(outside)}};
    out["propensity"] = p;
  }
  if (need_strata) {
    assignment = make_strata(frame, logits, config.strata);
    if (config.merge_strata) {
      std::vector<std::string> merges;
      assignment = merge_nonviable(frame, assignment, merges);
      for (auto& m : merges) notes.push_back(m);
    }
  }
  Json nonviable = Json::array();
  if (need_strata) {
    for (int j = 0; j < assignment.k; ++j) {
      if (!assignment.counts[static_cast<std::size_t>(j)].viable()) nonviable.push_back(j + 1);
    }
  }
  if (sections.strata) {
    Json s;
    s["k"] = assignment.k;
    s["breakpoints"] = assignment.breakpoints;
    Json rows = Json::array();
    for (int j = 0; j < assignment.k; ++j) {
      const auto idx = static_cast<std::size_t>(j);
      const auto& c = assignment.counts[idx];
      rows.push_back({{"stratum", j + 1},
                      {"logit_lo", assignment.logit_range[idx].first},
                      {"logit_hi", assignment.logit_range[idx].second},
                      {"n_population", c.population},
                      {"n_treated", c.sample_treated},
                      {"n_control", c.sample_control},
                      {"viable", c.viable()}});
    }
    s["rows"] = rows;
    out["strata"] = s;
  }

  // bounds requests in report order
  std::vector<Request> requests;
  for (auto a : assumptions) {
    for (auto f : frameworks) {
      if (a == Assumption::bsv) {
        for (const auto& l : lambdas) requests.push_back({a, f, l});
      } else {
        requests.push_back({a, f, std::nullopt});
      }
    }
  }
  BsvOptions bsv_options;
  bsv_options.r_code_compat = config.r_code_compat;
  if (config.r_code_compat) {
    notes.push_back("reduced-framework BSV uses the P(W=0,Z=0) mass for the lambda term");
  }

  Json improves = Json::array();
  if (sections.table1) {
    Json t1 = Json::array();
    for (const auto& r : requests) {
      switch (r.assumption) {
        case Assumption::worst_case:
          t1.push_back(interval_entry(worst_case_bounds(rates, probs, r.framework, support), r.lambda));
          break;
        case Assumption::bsv:
          t1.push_back(interval_entry(
              bsv_bounds(rates, probs, r.framework, r.lambda->value, support, bsv_options), r.lambda));
          break;
        case Assumption::mtr: {
          const auto m = mtr_bounds(frame, probs,
                                    r.framework == Framework::full ? MtrScope::sample
                                                                   : MtrScope::population);
          t1.push_back(interval_entry(m.min_variant, r.lambda));
          t1.push_back(interval_entry(m.max_variant, r.lambda));
          break;
        }
      }
    }
    for (const auto& e : t1) note_clamps(e, "table1", clamped);
    out["table1"] = t1;
    if (wants_bsv) {
      for (const auto& l : lambdas) {
        improves.push_back(
            {{"lambda_rule", l.rule}, {"lambda", l.value}, {"improves", bsv_improves(rates, l.value, support)}});
      }
    }
  }

  if (sections.table2) {
    Json t2 = Json::array();
    for (int j = 0; j < assignment.k; ++j) {
      const auto& c = assignment.counts[static_cast<std::size_t>(j)];
      t2.push_back({{"stratum", j + 1},
                    {"n_population", c.population},
                    {"n_treated", c.sample_treated},
                    {"n_control", c.sample_control},
                    {"viable", c.viable()},
                    {"results", Json::array()}});
    }
    Json pooled = Json::array();
    for (const auto& r : requests) {
      BoundsRequest req;
      req.assumption = r.assumption;
      req.framework = r.framework;
      req.lambda = r.lambda ? r.lambda->value : 0.0;
      req.assumed_p_w0_given_z0 = config.pw0z0;
      req.bsv = bsv_options;
      req.pooled = config.pooled;
      const StratifiedBounds sb = stratified_bounds(frame, assignment, req);
      for (const auto& s : sb.strata) {
        Json& results = t2[static_cast<std::size_t>(s.stratum)]["results"];
        if (s.interval) {
          results.push_back(interval_entry(*s.interval, r.lambda));
        } else if (s.mtr) {
          results.push_back(interval_entry(s.mtr->min_variant, r.lambda));
          results.push_back(interval_entry(s.mtr->max_variant, r.lambda));
        } else if (r.assumption == Assumption::mtr) {
          results.push_back(skipped_entry(r.assumption, r.framework, r.lambda, MtrVariant::min, *s.skipped));
          results.push_back(skipped_entry(r.assumption, r.framework, r.lambda, MtrVariant::max, *s.skipped));
        } else {
          results.push_back(skipped_entry(r.assumption, r.framework, r.lambda, std::nullopt, *s.skipped));
        }
      }
      if (sb.pooled) pooled.push_back(interval_entry(*sb.pooled, r.lambda));
      if (sb.pooled_mtr_max) pooled.push_back(interval_entry(*sb.pooled_mtr_max, r.lambda));
    }
    for (const auto& s : t2) {
      for (const auto& e : s["results"]) {
        note_clamps(e, "stratum " + std::to_string(s["stratum"].get<int>()), clamped);
      }
    }
    Json block;
    block["strata"] = t2;
    if (config.pooled) {
      block["pooled"] = pooled;
      notes.push_back("pooled per-stratum intervals weight stratum j by N_j/N");
    }
    out["table2"] = block;
  }

  if (sections.table3) {
    Json t3 = Json::array();
    auto point = [](const PointEstimate& e) {
      Json j;
      j["method"] = to_string(e.method);
      j["estimate"] = e.estimate;
      j["se"] = e.se;
      j["display"] = format_estimate(e);
      Json d = Json::object();
      for (const auto& [k, v] : e.details) d[k] = v;
      j["details"] = d;
      return j;
    };
    t3.push_back(point(naive_sate(frame)));
    BootstrapOptions boot;
    boot.reps = config.reps;
    boot.seed = config.seed;
    boot.threads = config.threads;
    Json ipw = point(ipw_estimate(frame, model, boot));
    ipw["weighting"] = "normalized inverse propensity";
    t3.push_back(ipw);
    try {
      t3.push_back(point(subclass_estimate(frame, assignment)));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonViableStratum) throw;
      t3.push_back({{"method", "subclassification"}, {"error", e.what()}});
    }
    out["table3"] = t3;
  }

  Json ledger;
  ledger["seed"] = config.seed;
  if (!improves.empty()) ledger["bsv_improves"] = improves;
  ledger["clamped"] = clamped;
  if (need_strata) ledger["nonviable_strata"] = nonviable;
  ledger["notes"] = notes;
  out["ledger"] = ledger;
  return out;
}

// ---------------------------------------------------------------------------
// rendering

namespace {

std::string fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string assumption_title(const std::string& a) {
  if (a == "worst_case") return "Treatment randomization";
  if (a == "bsv") return "Bounded sample variation";
  return "Monotone treatment response";
}

std::string assumption_short(const std::string& a) {
  if (a == "worst_case") return "TR";
  if (a == "bsv") return "BSV";
  return "MTR";
}

std::string interval_text(const Json& e) {
  if (e.contains("skipped")) return "skipped";
  const double lo = e["lo"].get<double>();
  const double hi = e["hi"].get<double>();
  if (std::abs(hi - lo) < 1e-12) return fixed(lo);
  return "[" + fixed(lo) + ", " + fixed(hi) + "]";
}

std::string lambda_text(const Json& e) {
  if (!e.contains("lambda")) return "";
  std::string s = fixed(e["lambda"].get<double>());
  if (e.contains("lambda_rule")) {
    const auto rule = e["lambda_rule"].get<std::string>();
    if (!csv::parse_double(rule)) s += " (" + rule + ")";
  }
  return s;
}

std::string column_label(const Json& e) {
  std::string s = assumption_short(e["assumption"].get<std::string>()) + " " +
                  e["framework"].get<std::string>();
  if (e.contains("lambda")) s += " λ=" + fixed(e["lambda"].get<double>());
  if (e.contains("variant")) s += " " + e["variant"].get<std::string>();
  return s;
}

std::string clamp_text(const Json& e) {
  const bool lo = e["clamped"]["lo"].get<bool>();
  const bool hi = e["clamped"]["hi"].get<bool>();
  if (lo && hi) return "both";
  if (lo) return "lo";
  if (hi) return "hi";
  return "";
}

std::string na_or(const Json& v, int decimals = 2) {
  return v.is_null() ? "n/a" : fixed(v.get<double>(), decimals);
}

}  // namespace

std::string render_markdown(const Json& r) {
  std::ostringstream os;
  os << "# PATE bounds\n\n";
  const Json& d = r["data"];
  os << "Units: " << d["n_units"].get<std::size_t>() << " (sample " << d["n_sample"].get<std::size_t>()
     << ": " << d["n_treated"].get<std::size_t>() << " treated, " << d["n_control"].get<std::size_t>()
     << " control). P(Z=1) = " << fixed(d["p_z1"].get<double>(), 4)
     << ", P(W=1|Z=1) = " << fixed(d["p_w1_given_z1"].get<double>(), 4)
     << ", assumed P(W=0|Z=0) = " << fixed(d["p_w0_given_z0"].get<double>()) << ".\n";
  os << "Outcome support [" << shortest(d["support"][0].get<double>()) << ", "
     << shortest(d["support"][1].get<double>()) << "]. Seed " << r["ledger"]["seed"].get<std::uint64_t>()
     << ".\n";

  if (r.contains("table1")) {
    os << "\n## Bounds on the PATE\n\n";
    os << "| Assumption | Framework | λ | Variant | Interval | Width | Clamped |\n";
    os << "|---|---|---|---|---|---|---|\n";
    for (const auto& e : r["table1"]) {
      os << "| " << assumption_title(e["assumption"].get<std::string>()) << " | "
         << e["framework"].get<std::string>() << " | " << lambda_text(e) << " | "
         << (e.contains("variant") ? e["variant"].get<std::string>() : "") << " | " << interval_text(e)
         << " | " << fixed(e["hi"].get<double>() - e["lo"].get<double>()) << " | " << clamp_text(e)
         << " |\n";
    }
  }

  if (r.contains("table2")) {
    const Json& strata = r["table2"]["strata"];
    os << "\n## Bounds by propensity score stratum\n\n";
    if (!strata.empty()) {
      const Json& first = strata[0]["results"];
      os << "| Stratum | N | Treated | Control |";
      for (const auto& e : first) os << ' ' << column_label(e) << " |";
      os << "\n|---|---|---|---|";
      for (std::size_t i = 0; i < first.size(); ++i) os << "---|";
      os << '\n';
      for (const auto& s : strata) {
        os << "| " << s["stratum"].get<int>() << " | " << s["n_population"].get<std::size_t>() << " | "
           << s["n_treated"].get<std::size_t>() << " | " << s["n_control"].get<std::size_t>() << " |";
        for (const auto& e : s["results"]) os << ' ' << interval_text(e) << " |";
        os << '\n';
      }
    }
    if (r["table2"].contains("pooled") && !r["table2"]["pooled"].empty()) {
      os << "\nPooled (N_j/N weights):\n\n";
      for (const auto& e : r["table2"]["pooled"]) {
        os << "- " << column_label(e) << ": " << interval_text(e) << '\n';
      }
    }
  }

  if (r.contains("table3")) {
    os << "\n## Point estimates\n\n";
    os << "| Method | Estimate (SE) |\n|---|---|\n";
    for (const auto& e : r["table3"]) {
      os << "| " << e["method"].get<std::string>() << " | "
         << (e.contains("display") ? e["display"].get<std::string>()
                                   : "not available: " + e["error"].get<std::string>())
         << " |\n";
    }
  }

  if (r.contains("propensity")) {
    const Json& p = r["propensity"];
    os << "\n## Sampling propensity model\n\n";
    os << "| Term | Coefficient |\n|---|---|\n";
    os << "| (intercept) | " << fixed(p["model"]["intercept"].get<double>(), 4) << " |\n";
    for (const auto& [name, v] : p["model"]["coefficients"].items()) {
      os << "| " << name << " | " << fixed(v.get<double>(), 4) << " |\n";
    }
    os << "\nConverged: " << (p["model"]["converged"].get<bool>() ? "yes" : "no") << " after "
       << p["model"]["iterations"].get<int>() << " iterations.";
    for (const char* who : {"sample", "non_sampled"}) {
      const Json& s = p["scores"][who];
      if (s.is_null()) continue;
      os << ' ' << (std::string(who) == "sample" ? "Sampled" : "Non-sampled") << " s(X) range ["
         << fixed(s["min"].get<double>(), 3) << ", " << fixed(s["max"].get<double>(), 3) << "], mean "
         << fixed(s["mean"].get<double>(), 3) << '.';
    }
    os << '\n';
  }

  if (r.contains("strata")) {
    os << "\n## Strata\n\n";
    os << "| Stratum | Logit range | N | Treated | Control | Viable |\n|---|---|---|---|---|---|\n";
    for (const auto& s : r["strata"]["rows"]) {
      os << "| " << s["stratum"].get<int>() << " | [" << fixed(s["logit_lo"].get<double>()) << ", "
         << fixed(s["logit_hi"].get<double>()) << "] | " << s["n_population"].get<std::size_t>() << " | "
         << s["n_treated"].get<std::size_t>() << " | " << s["n_control"].get<std::size_t>() << " | "
         << (s["viable"].get<bool>() ? "yes" : "no") << " |\n";
    }
  }

  if (r.contains("balance")) {
    os << "\n## Covariate balance\n\n";
    os << "| Covariate | Sample mean | Population mean | Population SD | ASMD |\n|---|---|---|---|---|\n";
    for (const auto& b : r["balance"]) {
      os << "| " << b["covariate"].get<std::string>() << " | " << fixed(b["sample_mean"].get<double>())
         << " | " << fixed(b["population_mean"].get<double>()) << " | "
         << fixed(b["population_sd"].get<double>()) << " | " << na_or(b["asmd"]) << " |\n";
    }
  }

  if (r.contains("lambda")) {
    os << "\n## Lambda\n\n";
    os << "| Rule | Value |\n|---|---|\n";
    for (const auto& c : r["lambda"]["candidates"]) {
      os << "| " << c["rule"].get<std::string>() << " | " << fixed(c["value"].get<double>()) << " |\n";
    }
    os << "\nSelected:";
    const char* sep = " ";
    for (const auto& s : r["lambda"]["selected"]) {
      os << sep << s["rule"].get<std::string>() << " = " << fixed(s["value"].get<double>())
         << (s["improves"].get<bool>() ? "" : " (no improvement over randomization)");
      sep = "; ";
    }
    os << ".\n";
  }

  const Json& l = r["ledger"];
  os << "\n## Assumptions ledger\n\n";
  if (l.contains("bsv_improves")) {
    for (const auto& b : l["bsv_improves"]) {
      os << "- BSV with λ = " << fixed(b["lambda"].get<double>()) << " ("
         << b["lambda_rule"].get<std::string>() << ") "
         << (b["improves"].get<bool>() ? "narrows" : "does not narrow")
         << " the randomization bounds\n";
    }
  }
  for (const auto& c : l["clamped"]) os << "- clamped to the outcome range: " << c.get<std::string>() << '\n';
  if (l.contains("nonviable_strata") && !l["nonviable_strata"].empty()) {
    os << "- strata without both sampled arms:";
    for (const auto& s : l["nonviable_strata"]) os << ' ' << s.get<int>();
    os << '\n';
  }
  for (const auto& n : l["notes"]) os << "- " << n.get<std::string>() << '\n';
  return os.str();
}

std::string render_csv(const Json& r) {
  std::ostringstream os;
  auto num = [](const Json& v) { return v.is_null() ? std::string() : shortest(v.get<double>()); };
  if (r.contains("table1") || r.contains("table2") || r.contains("table3")) {
    os << "section,stratum,assumption,framework,lambda,variant,lo,hi,pre_clamp_lo,pre_clamp_hi,"
          "clamped_lo,clamped_hi,method,estimate,se\n";
    auto bound_row = [&](const std::string& section, const std::string& stratum, const Json& e) {
      os << section << ',' << stratum << ',' << e["assumption"].get<std::string>() << ','
         << e["framework"].get<std::string>() << ',' << (e.contains("lambda") ? num(e["lambda"]) : "")
         << ',' << (e.contains("variant") ? e["variant"].get<std::string>() : "") << ',';
      if (e.contains("skipped")) {
        os << ",,,,,,,,\n";
        return;
      }
      os << num(e["lo"]) << ',' << num(e["hi"]) << ',' << num(e["pre_clamp"]["lo"]) << ','
         << num(e["pre_clamp"]["hi"]) << ',' << (e["clamped"]["lo"].get<bool>() ? 1 : 0) << ','
         << (e["clamped"]["hi"].get<bool>() ? 1 : 0) << ",,,\n";
    };
    if (r.contains("table1")) {
      for (const auto& e : r["table1"]) bound_row("table1", "all", e);
    }
    if (r.contains("table2")) {
      for (const auto& s : r["table2"]["strata"]) {
        for (const auto& e : s["results"]) bound_row("table2", std::to_string(s["stratum"].get<int>()), e);
      }
      if (r["table2"].contains("pooled")) {
        for (const auto& e : r["table2"]["pooled"]) bound_row("table2", "pooled", e);
      }
    }
    if (r.contains("table3")) {
      for (const auto& e : r["table3"]) {
        os << "table3,all,,,,,,,,,,," << e["method"].get<std::string>() << ',';
        if (e.contains("estimate")) os << num(e["estimate"]) << ',' << num(e["se"]);
        else os << ',';
        os << '\n';
      }
    }
    return os.str();
  }
  if (r.contains("strata")) {
    os << "stratum,logit_lo,logit_hi,n_population,n_treated,n_control,viable\n";
    for (const auto& s : r["strata"]["rows"]) {
      os << s["stratum"].get<int>() << ',' << num(s["logit_lo"]) << ',' << num(s["logit_hi"]) << ','
         << s["n_population"].get<std::size_t>() << ',' << s["n_treated"].get<std::size_t>() << ','
         << s["n_control"].get<std::size_t>() << ',' << (s["viable"].get<bool>() ? 1 : 0) << '\n';
    }
    return os.str();
  }
  if (r.contains("lambda")) {
    os << "rule,value\n";
    for (const auto& c : r["lambda"]["candidates"]) {
      os << csv::escape(c["rule"].get<std::string>()) << ',' << num(c["value"]) << '\n';
    }
    return os.str();
  }
  if (r.contains("propensity")) {
    os << "term,coefficient\n(intercept)," << num(r["propensity"]["model"]["intercept"]) << '\n';
    for (const auto& [name, v] : r["propensity"]["model"]["coefficients"].items()) {
      os << csv::escape(name) << ',' << num(v) << '\n';
    }
    return os.str();
  }
  if (r.contains("balance")) {
    os << "covariate,sample_mean,population_mean,population_sd,asmd\n";
    for (const auto& b : r["balance"]) {
      os << csv::escape(b["covariate"].get<std::string>()) << ',' << num(b["sample_mean"]) << ','
         << num(b["population_mean"]) << ',' << num(b["population_sd"]) << ',' << num(b["asmd"]) << '\n';
    }
  }
  return os.str();
}

std::string render(const Json& report, OutputFormat format) {
  switch (format) {
    case OutputFormat::json: return report.dump(2) + "\n";
    case OutputFormat::csv: return render_csv(report);
    case OutputFormat::md: return render_markdown(report);
  }
  return {};
}

}  // namespace pibgen
