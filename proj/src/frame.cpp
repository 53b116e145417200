#include "pibgen/frame.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "csv.hpp"
#include "pibgen/error.hpp"

namespace pibgen {

OutcomeSupport OutcomeSupport::make(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw Error(ErrorKind::InvalidSupport, "outcome support requires finite lo < hi");
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// StudyFrame

StudyFrame::StudyFrame(std::vector<UnitRecord> units, OutcomeSupport support,
                       std::vector<std::string> covariate_names)
    : units_(std::move(units)), support_(support), covariate_names_(std::move(covariate_names)) {
  if (!(support_.lo < support_.hi)) {
    throw Error(ErrorKind::InvalidSupport, "outcome support requires lo < hi");
  }
  binary_ = support_.is_binary();
  for (std::size_t i = 0; i < units_.size(); ++i) {
    const auto& u = units_[i];
    const std::size_t row = i + 1;
    if (u.z != 0 && u.z != 1) throw Error(ErrorKind::BadIndicator, "z must be 0 or 1", row);
    if (u.w && *u.w != 0 && *u.w != 1) {
      throw Error(ErrorKind::BadIndicator, "w must be 0 or 1", row);
    }
    if (u.y) {
      if (!std::isfinite(*u.y) || !support_.contains(*u.y)) {
        throw Error(ErrorKind::OutcomeOutOfSupport, "outcome outside support", row);
      }
      if (*u.y != 0.0 && *u.y != 1.0) binary_ = false;
    }
    if (u.z == 1) {
      if (!u.w || !u.y) {
        throw Error(ErrorKind::MissingSampleValue, "sampled unit needs treatment and outcome", row);
      }
      ++sample_size_;
    }
    if (u.x.size() != covariate_names_.size()) {
      throw Error(ErrorKind::MissingCovariate, "covariate count mismatch", row);
    }
    for (double v : u.x) {
      if (!std::isfinite(v)) throw Error(ErrorKind::MissingCovariate, "non-finite covariate", row);
    }
  }
}

std::optional<std::size_t> StudyFrame::covariate_index(std::string_view name) const {
  const auto it = std::find(covariate_names_.begin(), covariate_names_.end(), name);
  if (it == covariate_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - covariate_names_.begin());
}

std::vector<double> StudyFrame::covariate_column(std::string_view name) const {
  const auto idx = covariate_index(name);
  if (!idx) throw Error(ErrorKind::UnknownCovariate, "unknown covariate '" + std::string(name) + "'");
  std::vector<double> col;
  col.reserve(units_.size());
  for (const auto& u : units_) col.push_back(u.x[*idx]);
  return col;
}

StudyFrame StudyFrame::subset(std::span<const std::size_t> rows) const {
  std::vector<UnitRecord> picked;
  picked.reserve(rows.size());
  for (std::size_t r : rows) picked.push_back(units_.at(r));
  return StudyFrame(std::move(picked), support_, covariate_names_);
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::unordered_map<std::string, std::size_t> index;

  std::optional<std::size_t> col(const std::string& name) const {
    const auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

RawTable read_table(std::istream& in) {
  RawTable t;
  auto header = csv::read_record(in);
  if (!header) throw Error(ErrorKind::MissingColumn, "CSV input has no header row");
  for (auto& h : *header) h = std::string(csv::trim(h));
  // Tolerate a UTF-8 byte order mark on the first column.
  if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0) {
    header->front().erase(0, 3);
  }
  t.header = std::move(*header);
  for (std::size_t i = 0; i < t.header.size(); ++i) t.index.emplace(t.header[i], i);
  while (auto rec = csv::read_record(in)) {
    if (rec->size() == 1 && csv::trim(rec->front()).empty()) continue;
    rec->resize(t.header.size());
    t.rows.push_back(std::move(*rec));
  }
  return t;
}

std::optional<int> parse_indicator(std::string_view s, bool allow_empty, std::size_t row,
                                   const std::string& col) {
  s = csv::trim(s);
  if (s.empty()) {
    if (allow_empty) return std::nullopt;
    throw Error(ErrorKind::BadIndicator, "indicator is empty", row, col);
  }
  const auto v = csv::parse_double(s);
  if (!v || (*v != 0.0 && *v != 1.0)) {
    throw Error(ErrorKind::BadIndicator, "indicator must be 0 or 1", row, col);
  }
  return static_cast<int>(*v);
}

struct Source {
  const RawTable* table;
  std::optional<int> forced_z;  // two-file mode
  std::unordered_set<std::string> skip_ids;
};

StudyFrame build_frame(const std::vector<Source>& sources, const CsvSchema& schema,
                       OutcomeSupport support) {
  const RawTable& first = *sources.front().table;
  const std::set<std::string> roles = {schema.id_col, schema.sample_col, schema.treatment_col,
                                       schema.outcome_col};

  // Covariate columns, in header order of the first source unless listed.
  std::vector<std::string> columns;
  if (!schema.covariates.empty()) {
    columns = schema.covariates;
  } else {
    for (const auto& h : first.header) {
      if (roles.count(h) || h.empty()) continue;
      if (std::find(schema.exclude.begin(), schema.exclude.end(), h) != schema.exclude.end()) {
        continue;
      }
      columns.push_back(h);
    }
  }
  for (const auto& [name, ref] : schema.categorical) {
    if (std::find(columns.begin(), columns.end(), name) == columns.end()) {
      throw Error(ErrorKind::MissingColumn, "categorical column '" + name + "' is not a covariate");
    }
  }

  for (const auto& src : sources) {
    const RawTable& t = *src.table;
    if (!src.forced_z && !t.col(schema.sample_col)) {
      throw Error(ErrorKind::MissingColumn, "missing column '" + schema.sample_col + "'");
    }
    // A population-only file may omit treatment and outcome.
    const bool population_only = src.forced_z && *src.forced_z == 0;
    for (const auto* role : {&schema.treatment_col, &schema.outcome_col}) {
      if (!t.col(*role) && !population_only) {
        throw Error(ErrorKind::MissingColumn, "missing column '" + *role + "'");
      }
    }
    for (const auto& c : columns) {
      if (!t.col(c)) throw Error(ErrorKind::MissingColumn, "missing column '" + c + "'");
    }
  }

  // Levels of categorical columns across every source.
  std::map<std::string, std::vector<std::string>> dummy_levels;
  for (const auto& [name, ref] : schema.categorical) {
    std::set<std::string> levels;
    for (const auto& src : sources) {
      const auto c = *src.table->col(name);
      for (const auto& r : src.table->rows) {
        const auto v = std::string(csv::trim(r[c]));
        if (!v.empty()) levels.insert(v);
      }
    }
    if (!levels.count(ref)) {
      throw Error(ErrorKind::BadConfig,
                  "reference level '" + ref + "' never occurs in column '" + name + "'");
    }
    levels.erase(ref);
    dummy_levels[name].assign(levels.begin(), levels.end());
  }

  std::vector<std::string> names;
  for (const auto& c : columns) {
    const auto it = dummy_levels.find(c);
    if (it == dummy_levels.end()) {
      names.push_back(c);
    } else {
      for (const auto& level : it->second) names.push_back(c + "=" + level);
    }
  }

  std::vector<UnitRecord> units;
  for (const auto& src : sources) {
    const RawTable& t = *src.table;
    const auto id_col = t.col(schema.id_col);
    const auto z_col = t.col(schema.sample_col);
    const auto w_col = t.col(schema.treatment_col);
    const auto y_col = t.col(schema.outcome_col);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& fields = t.rows[r];
      const std::size_t row = r + 1;
      UnitRecord u;
      u.id = id_col ? std::string(csv::trim(fields[*id_col])) : std::to_string(units.size() + 1);
      if (src.skip_ids.count(u.id)) continue;
      u.z = src.forced_z ? *src.forced_z : *parse_indicator(fields[*z_col], false, row,
                                                             schema.sample_col);
      if (w_col) u.w = parse_indicator(fields[*w_col], true, row, schema.treatment_col);
      const auto ytext = y_col ? csv::trim(fields[*y_col]) : std::string_view{};
      if (!ytext.empty()) {
        const auto y = csv::parse_double(ytext);
        if (!y) throw Error(ErrorKind::BadNumber, "outcome is not a number", row, schema.outcome_col);
        if (!support.contains(*y)) {
          throw Error(ErrorKind::OutcomeOutOfSupport, "outcome outside support", row,
                      schema.outcome_col);
        }
        u.y = *y;
      }
      if (u.z == 1 && (!u.w || !u.y)) {
        throw Error(ErrorKind::MissingSampleValue, "sampled unit needs treatment and outcome", row);
      }
      for (const auto& c : columns) {
        const auto text = std::string(csv::trim(fields[*t.col(c)]));
        if (text.empty()) throw Error(ErrorKind::MissingCovariate, "missing covariate value", row, c);
        const auto it = dummy_levels.find(c);
        if (it != dummy_levels.end()) {
          for (const auto& level : it->second) u.x.push_back(text == level ? 1.0 : 0.0);
          continue;
        }
        const auto v = csv::parse_double(text);
        if (!v) throw Error(ErrorKind::BadNumber, "covariate is not a number", row, c);
        u.x.push_back(*v);
      }
      units.push_back(std::move(u));
    }
  }
  return StudyFrame(std::move(units), support, std::move(names));
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return in;
}

}  // namespace

StudyFrame load_frame(std::istream& csv_in, const CsvSchema& schema, OutcomeSupport support) {
  const RawTable table = read_table(csv_in);
  return build_frame({Source{&table, std::nullopt, {}}}, schema, support);
}

StudyFrame load_frame_file(const std::string& path, const CsvSchema& schema,
                           OutcomeSupport support) {
  auto in = open_or_throw(path);
  return load_frame(in, schema, support);
}

StudyFrame load_two_files(std::istream& sample_csv, std::istream& population_csv,
                          const CsvSchema& schema, OutcomeSupport support) {
  const RawTable sample = read_table(sample_csv);
  const RawTable population = read_table(population_csv);
  const auto sid = sample.col(schema.id_col);
  const auto pid = population.col(schema.id_col);
  if (!sid || !pid) {
    throw Error(ErrorKind::MissingColumn,
                "two-file mode needs an id column '" + schema.id_col + "' in both files");
  }
  std::unordered_set<std::string> sample_ids;
  for (const auto& r : sample.rows) sample_ids.insert(std::string(csv::trim(r[*sid])));
  return build_frame({Source{&sample, 1, {}}, Source{&population, 0, std::move(sample_ids)}},
                     schema, support);
}

StudyFrame load_two_files(const std::string& sample_path, const std::string& population_path,
                          const CsvSchema& schema, OutcomeSupport support) {
  auto s = open_or_throw(sample_path);
  auto p = open_or_throw(population_path);
  return load_two_files(s, p, schema, support);
}

// ---------------------------------------------------------------------------
// Design probabilities and rates

DesignProbs design_probs(const StudyFrame& frame, double assumed_p_w0_given_z0) {
  if (!(assumed_p_w0_given_z0 >= 0.0 && assumed_p_w0_given_z0 <= 1.0)) {
    throw Error(ErrorKind::BadConfig, "P(W=0|Z=0) must lie in [0, 1]");
  }
  std::size_t n = 0;
  std::size_t treated = 0;
  for (const auto& u : frame.units()) {
    if (u.z != 1) continue;
    ++n;
    if (*u.w == 1) ++treated;
  }
  if (n == 0) throw Error(ErrorKind::EmptySample, "no sampled units");
  DesignProbs p;
  p.p_z1 = static_cast<double>(n) / static_cast<double>(frame.size());
  p.p_w1_given_z1 = static_cast<double>(treated) / static_cast<double>(n);
  p.p_w0_given_z0 = assumed_p_w0_given_z0;
  return p;
}

EmpiricalRates EmpiricalRates::from_means(double e_y1_w1z1, double e_y0_w0z1,
                                          std::optional<double> e_y0_w0z0, bool binary) {
  EmpiricalRates r;
  r.e_y1_w1z1 = e_y1_w1z1;
  r.e_y0_w0z1 = e_y0_w0z1;
  r.e_y0_w0z0 = e_y0_w0z0;
  if (binary) {
    r.pass1_w1z1 = e_y1_w1z1;
    r.fail0_w0z1 = 1.0 - e_y0_w0z1;
    if (e_y0_w0z0) r.fail0_w0z0 = 1.0 - *e_y0_w0z0;
  }
  return r;
}

EmpiricalRates empirical_rates(const StudyFrame& frame) {
  double sum1 = 0.0, sum0 = 0.0, sum_pop = 0.0;
  std::size_t n1 = 0, n0 = 0, n_pop = 0;
  for (const auto& u : frame.units()) {
    if (u.z == 1) {
      if (*u.w == 1) {
        sum1 += *u.y;
        ++n1;
      } else {
        sum0 += *u.y;
        ++n0;
      }
    } else if (u.y) {
      sum_pop += *u.y;
      ++n_pop;
    }
  }
  if (n1 == 0) throw Error(ErrorKind::EmptyArm, "no sampled treated units");
  if (n0 == 0) throw Error(ErrorKind::EmptyArm, "no sampled control units");

  EmpiricalRates r;
  r.n_treated = n1;
  r.n_control = n0;
  r.n_population_outcomes = n_pop;
  r.e_y1_w1z1 = sum1 / static_cast<double>(n1);
  r.e_y0_w0z1 = sum0 / static_cast<double>(n0);
  if (n_pop > 0) r.e_y0_w0z0 = sum_pop / static_cast<double>(n_pop);
  if (frame.binary_outcomes()) {
    // Binary sums are exact integer counts.
    r.pass1_w1z1 = r.e_y1_w1z1;
    r.fail0_w0z1 = (static_cast<double>(n0) - sum0) / static_cast<double>(n0);
    if (n_pop > 0) r.fail0_w0z0 = (static_cast<double>(n_pop) - sum_pop) / static_cast<double>(n_pop);
  }
  return r;
}

}  // namespace pibgen
