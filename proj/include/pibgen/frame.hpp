#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pibgen {

/// Known range [lo, hi] of the outcome. Binary outcomes use [0, 1].
struct OutcomeSupport {
  double lo = 0.0;
  double hi = 1.0;

  static OutcomeSupport binary() { return {0.0, 1.0}; }
  /// Throws InvalidSupport unless lo < hi and both are finite.
  static OutcomeSupport make(double lo, double hi);

  double range() const { return hi - lo; }
  bool is_binary() const { return lo == 0.0 && hi == 1.0; }
  bool contains(double y) const { return y >= lo && y <= hi; }
};

/// One school/unit of the population. `w` is always present for sampled
/// units; on z=0 units it is an optional hypothetical arm label that only the
/// enumeration oracle reads. `y` on a z=0 unit is its business-as-usual
/// (control) outcome.
struct UnitRecord {
  std::string id;
  int z = 0;
  std::optional<int> w;
  std::optional<double> y;
  std::vector<double> x;
};

/// Combined sample + population frame. Immutable after construction.
class StudyFrame {
 public:
  StudyFrame() = default;
  /// Validates every record; throws Error on the first violation.
  StudyFrame(std::vector<UnitRecord> units, OutcomeSupport support,
             std::vector<std::string> covariate_names);

  const std::vector<UnitRecord>& units() const { return units_; }
  const OutcomeSupport& support() const { return support_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }

  std::size_t size() const { return units_.size(); }
  std::size_t sample_size() const { return sample_size_; }

  std::optional<std::size_t> covariate_index(std::string_view name) const;
  /// Throws UnknownCovariate.
  std::vector<double> covariate_column(std::string_view name) const;

  /// Support is {0,1} and every observed outcome is 0 or 1.
  bool binary_outcomes() const { return binary_; }

  /// Rows in the given order; support and covariate names are inherited.
  StudyFrame subset(std::span<const std::size_t> rows) const;

 private:
  std::vector<UnitRecord> units_;
  OutcomeSupport support_;
  std::vector<std::string> covariate_names_;
  std::size_t sample_size_ = 0;
  bool binary_ = false;
};

/// Column roles for CSV ingestion. Columns that are not a role, not listed in
/// `exclude`, and (when `covariates` is non-empty) listed there become
/// covariates. Categorical columns are one-hot encoded against the declared
/// reference level; the dummies are named "column=level".
struct CsvSchema {
  std::string id_col = "id";
  std::string sample_col = "in_sample";
  std::string treatment_col = "treatment";
  std::string outcome_col = "outcome";
  std::vector<std::string> covariates;
  std::vector<std::string> exclude;
  std::map<std::string, std::string> categorical;
};

StudyFrame load_frame(std::istream& csv, const CsvSchema& schema, OutcomeSupport support);
StudyFrame load_frame_file(const std::string& path, const CsvSchema& schema,
                           OutcomeSupport support);

/// Two-file mode: every row of the sample file is tagged z=1 (no sample
/// column needed); population rows are tagged z=0, except rows whose id also
/// appears in the sample file, which are dropped so each unit appears once.
StudyFrame load_two_files(std::istream& sample_csv, std::istream& population_csv,
                          const CsvSchema& schema, OutcomeSupport support);
StudyFrame load_two_files(const std::string& sample_path, const std::string& population_path,
                          const CsvSchema& schema, OutcomeSupport support);

struct DesignProbs {
  double p_z1 = 0.0;
  double p_w1_given_z1 = 0.0;
  /// Assumed, never observed.
  double p_w0_given_z0 = 0.5;

  double p_z0() const { return 1.0 - p_z1; }
  double p_w1_z1() const { return p_w1_given_z1 * p_z1; }
  double p_w0_z1() const { return (1.0 - p_w1_given_z1) * p_z1; }
  double p_w0_z0() const { return p_w0_given_z0 * p_z0(); }
  double p_w1_z0() const { return (1.0 - p_w0_given_z0) * p_z0(); }
};

/// Throws EmptySample when no unit is sampled, BadConfig when the assumed
/// probability is outside [0, 1].
DesignProbs design_probs(const StudyFrame& frame, double assumed_p_w0_given_z0);

/// Plug-in conditional expectations feeding every bound formula.
struct EmpiricalRates {
  double e_y1_w1z1 = 0.0;
  double e_y0_w0z1 = 0.0;
  std::optional<double> e_y0_w0z0;
  std::optional<double> pass1_w1z1;
  std::optional<double> fail0_w0z1;
  std::optional<double> fail0_w0z0;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  std::size_t n_population_outcomes = 0;

  double difference() const { return e_y1_w1z1 - e_y0_w0z1; }
  bool binary() const { return pass1_w1z1.has_value() && fail0_w0z1.has_value(); }

  /// Rates from summary values rather than a frame. With `binary` set the
  /// pass/fail rates are derived from the means.
  static EmpiricalRates from_means(double e_y1_w1z1, double e_y0_w0z1,
                                   std::optional<double> e_y0_w0z0, bool binary);
};

/// Arm means over sampled units; e_y0_w0z0 over z=0 units carrying an
/// outcome. Throws EmptyArm.
EmpiricalRates empirical_rates(const StudyFrame& frame);

}  // namespace pibgen
