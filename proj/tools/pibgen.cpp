// pibgen: partially identified PATE bounds from a randomized trial sample
// and its population frame.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pibgen/error.hpp"
#include "pibgen/oracle.hpp"
#include "pibgen/report.hpp"

namespace {

using namespace pibgen;

struct Flags {
  std::string config;
  std::string output;
  AnalysisConfig values;
  std::string support;
  std::string covariates;
  std::string exclude;
  std::string framework;
  std::vector<std::string> assumptions;
  std::string format;
  // verify only
  int random_frames = 0;
  int max_units = 10;

  std::vector<std::pair<CLI::Option*, std::string>> opts;
};

void add_common(CLI::App* cmd, Flags& f) {
  auto& v = f.values;
  auto add = [&](const std::string& name, auto& target, const std::string& help) {
    CLI::Option* o = cmd->add_option(name, target, help);
    f.opts.emplace_back(o, name);
    return o;
  };
  add("--config", f.config, "JSON config file (flags override it)");
  add("-o,--output", f.output, "write the report here instead of stdout");
  add("--data", v.data, "one CSV holding sampled and population units");
  add("--sample", v.sample, "two-file mode: sampled units");
  add("--population", v.population, "two-file mode: population units");
  add("--id-col", v.schema.id_col, "unit id column");
  add("--outcome-col", v.schema.outcome_col, "outcome column");
  add("--treatment-col", v.schema.treatment_col, "treatment indicator column");
  add("--sample-col", v.schema.sample_col, "sample indicator column");
  add("--support", f.support, "outcome support as lo,hi (default 0,1)");
  add("--covariates", f.covariates, "comma-separated covariate columns (default: all others)");
  add("--exclude", f.exclude, "comma-separated columns to ignore");
  add("--strata", v.strata, "number of propensity score strata");
  add("--pw0z0", v.pw0z0, "assumed P(W=0|Z=0)");
  add("--lambda", v.lambdas, "BSV lambda: a number, asmd:max|mean|single:covs, sd:pooled|max_arm[:mult]");
  add("--framework", f.framework, "full, reduced or both");
  add("--assumption", f.assumptions, "worst, bsv or mtr (repeatable)");
  add("--seed", v.seed, "bootstrap seed (env PIBGEN_SEED as fallback)");
  add("--reps", v.reps, "bootstrap replicates");
  add("--threads", v.threads, "bootstrap threads");
  add("--format", f.format, "json, csv or md");
  add("--ridge", v.ridge, "L2 penalty on standardized propensity slopes");
  CLI::Option* flag = cmd->add_flag("--merge-strata", v.merge_strata, "fold strata lacking an arm into a neighbour");
  f.opts.emplace_back(flag, "--merge-strata");
  flag = cmd->add_flag("--pooled", v.pooled, "also report N_j/N pooled stratum intervals");
  f.opts.emplace_back(flag, "--pooled");
  flag = cmd->add_flag("--r-code-compat", v.r_code_compat,
                       "reduced BSV: put the lambda term on P(W=0,Z=0) mass");
  f.opts.emplace_back(flag, "--r-code-compat");
}

bool given(const Flags& f, const std::string& name) {
  for (const auto& [opt, n] : f.opts) {
    if (n == name) return opt->count() > 0;
  }
  return false;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Layering: defaults < PIBGEN_SEED < config file < flags.
AnalysisConfig resolve(const Flags& f) {
  AnalysisConfig c;
  if (const char* env = std::getenv("PIBGEN_SEED")) {
    try {
      std::size_t used = 0;
      c.seed = std::stoull(env, &used);
      if (env[used] != '\0') throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorKind::BadConfig, "PIBGEN_SEED is not an unsigned integer");
    }
  }
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw Error(ErrorKind::BadConfig, "cannot open config file '" + f.config + "'");
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::BadConfig, "config file is not valid JSON: " + std::string(e.what()));
    }
    const std::uint64_t env_seed = c.seed;
    c = config_from_json(j);
    if (!j.contains("seed")) c.seed = env_seed;
  }
  const AnalysisConfig& v = f.values;
  if (given(f, "--data")) c.data = v.data;
  if (given(f, "--sample")) c.sample = v.sample;
  if (given(f, "--population")) c.population = v.population;
  if (given(f, "--id-col")) c.schema.id_col = v.schema.id_col;
  if (given(f, "--outcome-col")) c.schema.outcome_col = v.schema.outcome_col;
  if (given(f, "--treatment-col")) c.schema.treatment_col = v.schema.treatment_col;
  if (given(f, "--sample-col")) c.schema.sample_col = v.schema.sample_col;
  if (given(f, "--support")) c.support = parse_support(f.support);
  if (given(f, "--covariates")) c.schema.covariates = split_list(f.covariates);
  if (given(f, "--exclude")) c.schema.exclude = split_list(f.exclude);
  if (given(f, "--strata")) c.strata = v.strata;
  if (given(f, "--pw0z0")) c.pw0z0 = v.pw0z0;
  if (given(f, "--lambda")) c.lambdas = v.lambdas;
  if (given(f, "--framework")) c.frameworks = parse_frameworks(f.framework);
  if (given(f, "--assumption")) {
    c.assumptions.clear();
    for (const auto& a : f.assumptions) c.assumptions.push_back(parse_assumption(a));
  }
  if (given(f, "--seed")) c.seed = v.seed;
  if (given(f, "--reps")) c.reps = v.reps;
  if (given(f, "--threads")) c.threads = v.threads;
  if (given(f, "--format")) c.format = parse_format(f.format);
  if (given(f, "--ridge")) c.ridge = v.ridge;
  if (given(f, "--merge-strata")) c.merge_strata = v.merge_strata;
  if (given(f, "--pooled")) c.pooled = v.pooled;
  if (given(f, "--r-code-compat")) c.r_code_compat = v.r_code_compat;
  return c;
}

void emit(const Flags& f, const std::string& text) {
  if (f.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(f.output, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + f.output + "'");
  out << text;
}

Sections sections_for(const std::string& command) {
  Sections s;
  if (command == "analyze") return Sections::all();
  if (command == "propensity") {
    s.propensity = true;
    s.balance = true;
  } else if (command == "strata") {
    s.strata = true;
  } else if (command == "lambda") {
    s.balance = true;
    s.lambda = true;
  } else if (command == "bounds") {
    s.table1 = true;
  } else if (command == "points") {
    s.table3 = true;
  }
  return s;
}

std::string verify_text(const std::vector<std::pair<std::string, oracle::VerifyReport>>& runs) {
  std::ostringstream os;
  std::size_t checks = 0, failures = 0;
  for (const auto& [dump, report] : runs) {
    for (const auto& c : report.checks) {
      ++checks;
      if (c.pass) continue;
      ++failures;
      os.precision(17);
      os << "MISMATCH " << c.name << ": oracle [" << c.oracle_lo << ", " << c.oracle_hi << "] engine ["
         << c.engine_lo << ", " << c.engine_hi << "]\n"
         << dump;
    }
  }
  os << (failures ? "FAIL" : "PASS") << ": " << runs.size() << " frame(s), " << checks << " checks, "
     << failures << " mismatches\n";
  return os.str();
}

Json verify_json(const std::vector<std::pair<std::string, oracle::VerifyReport>>& runs) {
  Json frames = Json::array();
  bool pass = true;
  for (const auto& [dump, report] : runs) {
    Json checks = Json::array();
    for (const auto& c : report.checks) {
      checks.push_back({{"name", c.name},
                        {"pass", c.pass},
                        {"oracle", {c.oracle_lo, c.oracle_hi}},
                        {"engine", {c.engine_lo, c.engine_hi}}});
    }
    Json fr{{"pass", report.pass()}, {"checks", checks}, {"skipped", report.skipped}};
    if (!report.pass()) fr["frame"] = dump;
    frames.push_back(fr);
    pass = pass && report.pass();
  }
  return Json{{"pass", pass}, {"frames", frames}};
}

int run_verify(const Flags& f, const AnalysisConfig& c) {
  std::vector<std::pair<std::string, oracle::VerifyReport>> runs;
  const auto lambdas = oracle::default_lambdas();
  if (f.random_frames > 0) {
    std::mt19937_64 rng(c.seed);
    for (int i = 0; i < f.random_frames; ++i) {
      const StudyFrame frame = oracle::random_frame(rng, f.max_units, i % 2 == 0);
      runs.emplace_back(oracle::describe_frame(frame), oracle::verify_frame(frame, lambdas));
    }
  } else {
    const StudyFrame frame = load_input(c);
    if (frame.size() == 0) throw Error(ErrorKind::EmptySample, "frame has no units");
    runs.emplace_back(oracle::describe_frame(frame), oracle::verify_frame(frame, lambdas));
  }
  bool pass = true;
  for (const auto& r : runs) pass = pass && r.second.pass();
  emit(f, c.format == OutputFormat::json ? verify_json(runs).dump(2) + "\n" : verify_text(runs));
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partially identified PATE bounds for randomized trial generalization"};
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> commands{
      {"analyze", "full pipeline: propensity, strata, lambda, bounds, point estimates"},
      {"propensity", "fit the sampling propensity model and report balance"},
      {"strata", "propensity score strata and their counts"},
      {"lambda", "covariate balance and candidate BSV lambda values"},
      {"bounds", "whole-frame PATE intervals"},
      {"points", "naive, IPW and subclassification point estimates"},
      {"verify", "check the closed-form bounds against exhaustive enumeration"}};
  std::vector<Flags> flags(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* cmd = app.add_subcommand(commands[i].first, commands[i].second);
    add_common(cmd, flags[i]);
    subs.push_back(cmd);
  }
  CLI::App* verify = subs.back();
  verify->add_option("--random", flags.back().random_frames,
                     "check this many random frames instead of --data");
  verify->add_option("--max-units", flags.back().max_units, "largest random frame");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const Flags& f = flags[i];
    const std::string& name = commands[i].first;
    try {
      const AnalysisConfig config = resolve(f);
      if (name == "verify") return run_verify(f, config);
      const StudyFrame frame = load_input(config);
      const Json report = run_analysis(frame, config, sections_for(name));
      emit(f, render(report, config.format));
      return 0;
    } catch (const Error& e) {
      std::cerr << "pibgen " << name << ": " << e.what() << '\n';
      return is_config_error(e.kind()) ? 3 : 2;
    } catch (const std::exception& e) {
      std::cerr << "pibgen " << name << ": " << e.what() << '\n';
      return 2;
    }
  }
  return 3;
}
