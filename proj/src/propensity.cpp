#include "pibgen/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "pibgen/error.hpp"
#include "pibgen/kernels.hpp"

namespace pibgen {

namespace {

// log(1 + exp(eta)) without overflow.
double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

std::vector<std::vector<double>> gather_columns(const StudyFrame& frame,
                                                std::span<const std::string> covariates) {
  std::vector<std::vector<double>> cols;
  cols.reserve(covariates.size());
  for (const auto& name : covariates) cols.push_back(frame.covariate_column(name));
  return cols;
}

std::vector<double> sample_indicator(const StudyFrame& frame) {
  std::vector<double> z;
  z.reserve(frame.size());
  for (const auto& u : frame.units()) z.push_back(static_cast<double>(u.z));
  return z;
}

// Mean log-likelihood state of the standardized problem at theta.
struct IrlsState {
  std::vector<double> eta;
  std::vector<double> prob;
  double objective = 0.0;
};

class StandardizedProblem {
 public:
  StandardizedProblem(std::vector<std::vector<double>> cols, std::vector<double> z, double ridge)
      : cols_(std::move(cols)), z_(std::move(z)), ridge_(ridge) {
    n_ = static_cast<double>(z_.size());
  }

  std::size_t dim() const { return cols_.size() + 1; }

  IrlsState evaluate(const Eigen::VectorXd& theta) const {
    IrlsState s;
    s.eta.assign(z_.size(), theta[0]);
    for (std::size_t j = 0; j < cols_.size(); ++j) kernels::axpy(theta[j + 1], cols_[j], s.eta);
    s.prob.resize(z_.size());
    double ll = 0.0;
    for (std::size_t i = 0; i < z_.size(); ++i) {
      s.prob[i] = inverse_logit(s.eta[i]);
      ll += z_[i] * s.eta[i] - softplus(s.eta[i]);
    }
    double penalty = 0.0;
    for (Eigen::Index j = 1; j < theta.size(); ++j) penalty += theta[j] * theta[j];
    s.objective = ll / n_ - 0.5 * ridge_ * penalty;
    return s;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& theta, const IrlsState& s) const {
    std::vector<double> resid(z_.size());
    for (std::size_t i = 0; i < z_.size(); ++i) resid[i] = z_[i] - s.prob[i];
    Eigen::VectorXd g(dim());
    g[0] = kernels::sum(resid) / n_;
    for (std::size_t j = 0; j < cols_.size(); ++j) {
      g[j + 1] = kernels::dot(cols_[j], resid) / n_ - ridge_ * theta[j + 1];
    }
    return g;
  }

  // Negative Hessian of the objective (positive definite when well posed).
  Eigen::MatrixXd information(const IrlsState& s) const {
    std::vector<double> v(z_.size());
    for (std::size_t i = 0; i < z_.size(); ++i) v[i] = s.prob[i] * (1.0 - s.prob[i]);
    const auto p = cols_.size();
    Eigen::MatrixXd h(dim(), dim());
    h(0, 0) = kernels::sum(v) / n_;
    for (std::size_t j = 0; j < p; ++j) {
      h(0, j + 1) = h(j + 1, 0) = kernels::dot(v, cols_[j]) / n_;
      for (std::size_t k = j; k < p; ++k) {
        h(j + 1, k + 1) = h(k + 1, j + 1) = kernels::weighted_dot(v, cols_[j], cols_[k]) / n_;
      }
      h(j + 1, j + 1) += ridge_;
    }
    return h;
  }

  const std::vector<double>& z() const { return z_; }

 private:
  std::vector<std::vector<double>> cols_;
  std::vector<double> z_;
  double ridge_;
  double n_;
};

// Fitted values reproduce z exactly on some unit far out on the logit scale:
// the likelihood keeps rising along the current direction.
bool looks_separated(const IrlsState& s, const std::vector<double>& z) {
  constexpr double kSaturated = 30.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if ((z[i] == 1.0 && s.eta[i] > kSaturated) || (z[i] == 0.0 && s.eta[i] < -kSaturated)) {
      return true;
    }
  }
  return false;
}

std::string describe_direction(const Eigen::VectorXd& theta,
                               std::span<const std::string> covariates) {
  std::ostringstream os;
  os.precision(4);
  const double norm = theta.norm();
  os << "diverging direction (standardized):";
  os << " intercept=" << theta[0] / norm;
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    os << ' ' << covariates[j] << '=' << theta[static_cast<Eigen::Index>(j) + 1] / norm;
  }
  return os.str();
}

}  // namespace

double inverse_logit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

std::optional<double> PropensityModel::coefficient(std::string_view name) const {
  for (const auto& [n, v] : coefficients) {
    if (n == name) return v;
  }
  return std::nullopt;
}

PropensityModel fit_propensity(const StudyFrame& frame, std::span<const std::string> covariates,
                               const FitOptions& options) {
  if (options.ridge < 0.0 || options.tolerance <= 0.0 || options.max_iter < 1) {
    throw Error(ErrorKind::BadConfig, "invalid propensity fit options");
  }
  auto cols = gather_columns(frame, covariates);
  auto z = sample_indicator(frame);
  const double n = static_cast<double>(z.size());
  const double n_sampled = static_cast<double>(frame.sample_size());
  if (n_sampled == 0.0 || n_sampled == n) {
    throw Error(ErrorKind::Separation, "sample indicator is constant; intercept diverges");
  }

  // Standardize columns (denominator-N moments).
  std::vector<double> centers(cols.size()), scales(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const double mean = kernels::sum(cols[j]) / n;
    const double sd = std::sqrt(kernels::sum_sq_dev(cols[j], mean) / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      throw Error(ErrorKind::SingularDesign, "covariate '" + covariates[j] + "' is constant");
    }
    centers[j] = mean;
    scales[j] = sd;
    for (double& v : cols[j]) v = (v - mean) / sd;
  }

  // Collinearity: the correlation matrix of the standardized design.
  if (cols.size() > 1) {
    const auto p = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd corr(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index k = j; k < p; ++k) {
        corr(j, k) = corr(k, j) = kernels::dot(cols[j], cols[k]) / n;
      }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < 1e-10 * eig.eigenvalues().maxCoeff()) {
      throw Error(ErrorKind::SingularDesign, "covariates are linearly dependent");
    }
  }

  StandardizedProblem problem(std::move(cols), std::move(z), options.ridge);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem.dim()));
  // Start the intercept at the sample log-odds; exact for intercept-only fits.
  theta[0] = std::log(n_sampled / (n - n_sampled));

  IrlsState state = problem.evaluate(theta);
  Eigen::VectorXd grad = problem.gradient(theta, state);
  bool converged = false;
  int iterations = 0;
  bool diverging = false;

  for (; iterations < options.max_iter; ++iterations) {
    if (grad.norm() <= options.tolerance) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd info = problem.information(state);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      if (options.ridge == 0.0 && looks_separated(state, problem.z())) {
        diverging = true;
        break;
      }
      throw Error(ErrorKind::SingularDesign, "information matrix is not positive definite");
    }
    const Eigen::VectorXd step = ldlt.solve(grad);

    // Step halving keeps the objective non-decreasing.
    double scale = 1.0;
    Eigen::VectorXd candidate;
    IrlsState next;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      candidate = theta + scale * step;
      next = problem.evaluate(candidate);
      if (next.objective >= state.objective) {
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;  // no ascent available at working precision
    theta = std::move(candidate);
    state = std::move(next);
    grad = problem.gradient(theta, state);
    if (options.ridge == 0.0 && theta.tail(theta.size() - 1).norm() > 1e3) {
      diverging = true;
      break;
    }
  }
  if (!converged && grad.norm() <= options.tolerance) converged = true;

  if (options.ridge == 0.0 && (diverging || looks_separated(state, problem.z()))) {
    throw Error(ErrorKind::Separation,
                "maximum likelihood does not exist; " + describe_direction(theta, covariates));
  }
  if (!converged) {
    throw Error(ErrorKind::NoConvergence,
                "no convergence after " + std::to_string(iterations) + " iterations (gradient norm " +
                    std::to_string(grad.norm()) + ")");
  }

  PropensityModel model;
  model.intercept = theta[0];
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    const double b = theta[static_cast<Eigen::Index>(j) + 1] / scales[j];
    model.intercept -= b * centers[j];
    model.coefficients.emplace_back(covariates[j], b);
  }
  model.converged = true;
  model.iterations = iterations;
  model.final_gradient_norm = grad.norm();
  return model;
}

std::vector<double> logit_scores(const PropensityModel& model, const StudyFrame& frame) {
  std::vector<double> eta(frame.size(), model.intercept);
  for (const auto& [name, b] : model.coefficients) {
    if (!frame.covariate_index(name)) {
      throw Error(ErrorKind::MissingCovariate, "frame lacks model covariate '" + name + "'");
    }
    kernels::axpy(b, frame.covariate_column(name), eta);
  }
  return eta;
}

std::vector<double> propensity_scores(const PropensityModel& model, const StudyFrame& frame) {
  auto s = logit_scores(model, frame);
  for (double& v : s) v = inverse_logit(v);
  return s;
}

// ---------------------------------------------------------------------------

LogisticLikelihood::LogisticLikelihood(const StudyFrame& frame,
                                       std::span<const std::string> covariates)
    : columns_(gather_columns(frame, covariates)), z_(sample_indicator(frame)) {}

std::vector<double> LogisticLikelihood::eta(std::span<const double> beta) const {
  std::vector<double> e(z_.size(), beta[0]);
  for (std::size_t j = 0; j < columns_.size(); ++j) kernels::axpy(beta[j + 1], columns_[j], e);
  return e;
}

double LogisticLikelihood::value(std::span<const double> beta) const {
  const auto e = eta(beta);
  double ll = 0.0;
  for (std::size_t i = 0; i < z_.size(); ++i) ll += z_[i] * e[i] - softplus(e[i]);
  return ll;
}

std::vector<double> LogisticLikelihood::gradient(std::span<const double> beta) const {
  const auto e = eta(beta);
  std::vector<double> resid(z_.size());
  for (std::size_t i = 0; i < z_.size(); ++i) resid[i] = z_[i] - inverse_logit(e[i]);
  std::vector<double> g(dimension());
  g[0] = kernels::sum(resid);
  for (std::size_t j = 0; j < columns_.size(); ++j) g[j + 1] = kernels::dot(columns_[j], resid);
  return g;
}

nlohmann::ordered_json to_json(const PropensityModel& model) {
  nlohmann::ordered_json coefs = nlohmann::ordered_json::object();
  for (const auto& [name, v] : model.coefficients) coefs[name] = v;
  nlohmann::ordered_json j;
  j["intercept"] = model.intercept;
  j["coefficients"] = coefs;
  j["converged"] = model.converged;
  j["iterations"] = model.iterations;
  return j;
}

PropensityModel propensity_model_from_json(const nlohmann::ordered_json& j) {
  try {
    PropensityModel m;
    m.intercept = j.at("intercept").get<double>();
    for (const auto& [name, v] : j.at("coefficients").items()) {
      m.coefficients.emplace_back(name, v.get<double>());
    }
    m.converged = j.at("converged").get<bool>();
    m.iterations = j.at("iterations").get<int>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("malformed propensity model: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Balance

const CovariateBalance* BalanceReport::find(std::string_view name) const {
  for (const auto& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

namespace {

CovariateBalance balance_of(const StudyFrame& frame, std::string_view name) {
  const auto col = frame.covariate_column(name);
  if (frame.sample_size() == 0) throw Error(ErrorKind::EmptySample, "no sampled units");
  const double n = static_cast<double>(col.size());
  CovariateBalance b;
  b.name = std::string(name);
  b.population_mean = kernels::sum(col) / n;
  b.population_sd = std::sqrt(kernels::sum_sq_dev(col, b.population_mean) / n);
  double s = 0.0;
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (frame.units()[i].z == 1) s += col[i];
  }
  b.sample_mean = s / static_cast<double>(frame.sample_size());
  // A constant column can leave rounding residue in the SD; treat it as zero.
  if (b.population_sd > 1e-12 * std::max(1.0, std::abs(b.population_mean))) {
    b.asmd = std::abs(b.population_mean - b.sample_mean) / b.population_sd;
  }
  return b;
}

}  // namespace

double asmd(const StudyFrame& frame, std::string_view covariate) {
  const auto b = balance_of(frame, covariate);
  if (!b.asmd) {
    throw Error(ErrorKind::ZeroVariance,
                "covariate '" + std::string(covariate) + "' has zero population variance");
  }
  return *b.asmd;
}

BalanceReport balance_report(const StudyFrame& frame, std::span<const std::string> covariates) {
  BalanceReport report;
  for (const auto& name : covariates) report.rows.push_back(balance_of(frame, name));
  return report;
}

}  // namespace pibgen
