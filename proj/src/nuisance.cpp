#include "objdose/nuisance.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "objdose/rng.hpp"

namespace objdose {

std::string to_string(GpsKind kind) {
  switch (kind) {
    case GpsKind::linear_gaussian: return "linear_gaussian";
    case GpsKind::kernel_conditional: return "kernel_conditional";
    case GpsKind::constant: return "constant";
  }
  return "unknown";
}

GpsKind parse_gps_kind(const std::string& name) {
  if (name == "linear_gaussian") return GpsKind::linear_gaussian;
  if (name == "kernel_conditional") return GpsKind::kernel_conditional;
  if (name == "constant") return GpsKind::constant;
  throw std::invalid_argument("unknown gps kind: " + name);
}

std::string to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::global_basis: return "global_basis";
    case OutcomeKind::local_linear: return "local_linear";
    case OutcomeKind::zero: return "zero";
  }
  return "unknown";
}

OutcomeKind parse_outcome_kind(const std::string& name) {
  if (name == "global_basis") return OutcomeKind::global_basis;
  if (name == "local_linear") return OutcomeKind::local_linear;
  if (name == "zero") return OutcomeKind::zero;
  throw std::invalid_argument("unknown outcome kind: " + name);
}

double rule_of_thumb_bandwidth(const Eigen::VectorXd& column) {
  const int n = static_cast<int>(column.size());
  if (n < 2) return 1.0;
  const double mean = column.mean();
  const double var = (column.array() - mean).square().sum() / (n - 1);
  const double sd = std::sqrt(var);
  if (!(sd > 0.0)) return 1.0;
  return 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
}

// ---------------------------------------------------------------------------
// GPS models
// ---------------------------------------------------------------------------

LinearGaussianGps::LinearGaussianGps(Eigen::VectorXd beta, double sigma, double floor,
                                     int n_train)
    : beta_(std::move(beta)), sigma_(sigma), n_train_(n_train) {
  floor_ = floor;
  if (!(sigma_ > 0.0)) throw std::invalid_argument("LinearGaussianGps: sigma must be positive");
}

double LinearGaussianGps::conditional_mean(const Eigen::RowVectorXd& x) const {
  if (x.size() + 1 != beta_.size())
    throw std::invalid_argument("LinearGaussianGps: covariate dimension mismatch");
  return beta_[0] + x * beta_.tail(x.size());
}

double LinearGaussianGps::density(double t, const Eigen::RowVectorXd& x) const {
  const double z = (t - conditional_mean(x)) / sigma_;
  return normal_pdf(z) / sigma_;
}

KernelConditionalGps::KernelConditionalGps(Eigen::MatrixXd x, Eigen::VectorXd t,
                                           double treatment_bandwidth,
                                           Eigen::VectorXd covariate_bandwidths,
                                           std::vector<bool> discrete, double floor)
    : x_(std::move(x)),
      t_(std::move(t)),
      h_t_(treatment_bandwidth),
      h_x_(std::move(covariate_bandwidths)),
      discrete_(std::move(discrete)) {
  floor_ = floor;
  if (!(h_t_ > 0.0))
    throw std::invalid_argument("KernelConditionalGps: treatment bandwidth must be positive");
  for (int j = 0; j < h_x_.size(); ++j) {
    if (!discrete_[static_cast<std::size_t>(j)] && !(h_x_[j] > 0.0))
      throw std::invalid_argument("KernelConditionalGps: covariate bandwidth must be positive");
  }
}

double KernelConditionalGps::density(double t, const Eigen::RowVectorXd& x) const {
  if (x.size() != x_.cols())
    throw std::invalid_argument("KernelConditionalGps: covariate dimension mismatch");
  const int n = static_cast<int>(t_.size());
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    double w = 1.0;
    for (int j = 0; j < x.size(); ++j) {
      if (discrete_[static_cast<std::size_t>(j)]) {
        if (x_(i, j) != x[j]) {
          w = 0.0;
          break;
        }
      } else {
        w *= normal_pdf((x_(i, j) - x[j]) / h_x_[j]);
      }
    }
    if (w == 0.0) continue;
    den += w;
    num += w * normal_pdf((t_[i] - t) / h_t_) / h_t_;
  }
  if (den <= 0.0)
    throw std::runtime_error("KernelConditionalGps: zero total weight at query point");
  return num / den;
}

ConstantGps::ConstantGps(double value, double floor) : value_(value) {
  floor_ = floor;
  if (!(value_ > 0.0)) throw std::invalid_argument("ConstantGps: value must be positive");
}

std::unique_ptr<GpsModel> fit_gps(const ObservationSet& data, const GpsOptions& options) {
  data.validate();
  const int n = data.n();
  const int p = data.p();
  switch (options.kind) {
    case GpsKind::linear_gaussian: {
      if (n < p + 2) throw std::invalid_argument("fit_gps: need n >= p + 2 for linear_gaussian");
      Eigen::MatrixXd design(n, p + 1);
      design.col(0).setOnes();
      design.rightCols(p) = data.covariates;
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
      if (qr.rank() < p + 1) throw std::runtime_error("fit_gps: singular design matrix");
      Eigen::VectorXd beta = qr.solve(data.treatment);
      const Eigen::VectorXd resid = data.treatment - design * beta;
      const double sigma2 = resid.squaredNorm() / static_cast<double>(n - p - 1);
      if (!(sigma2 > 1e-24)) throw std::runtime_error("fit_gps: zero residual variance");
      return std::make_unique<LinearGaussianGps>(std::move(beta), std::sqrt(sigma2),
                                                 options.floor, n);
    }
    case GpsKind::kernel_conditional: {
      double h_t = options.treatment_bandwidth > 0.0 ? options.treatment_bandwidth
                                                     : rule_of_thumb_bandwidth(data.treatment);
      Eigen::VectorXd h_x(p);
      std::vector<bool> discrete(p, false);
      for (int j = 0; j < p; ++j) {
        discrete[static_cast<std::size_t>(j)] = data.is_discrete(j);
        if (!options.covariate_bandwidths.empty()) {
          h_x[j] = options.covariate_bandwidths[static_cast<std::size_t>(j)];
        } else {
          h_x[j] = discrete[static_cast<std::size_t>(j)]
                       ? 1.0
                       : rule_of_thumb_bandwidth(data.covariates.col(j));
        }
      }
      return std::make_unique<KernelConditionalGps>(data.covariates, data.treatment, h_t, h_x,
                                                    std::move(discrete), options.floor);
    }
    case GpsKind::constant:
      return std::make_unique<ConstantGps>(options.constant_value, options.floor);
  }
  throw std::logic_error("fit_gps: unreachable");
}

double mean_log_density(const GpsModel& model, const ObservationSet& data) {
  double total = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const Eigen::RowVectorXd xi = data.covariates.row(i);
    total += std::log(std::max(model.density(data.treatment[i], xi), 1e-300));
  }
  return total / data.n();
}

// ---------------------------------------------------------------------------
// Outcome models
// ---------------------------------------------------------------------------

GlobalBasisOutcome::GlobalBasisOutcome(const ObservationSet& data, bool model_a_basis)
    : extra_x3sq_(model_a_basis), p_(data.p()) {
  m_ = data.m();
  grid_kind_ = data.grid_kind;
  if (extra_x3sq_ && p_ < 3)
    throw std::invalid_argument("GlobalBasisOutcome: x3^2 feature needs at least 3 covariates");
  const int n = data.n();
  const int d = 2 * p_ + 4 + (extra_x3sq_ ? 1 : 0);
  if (n <= d)
    throw std::invalid_argument("GlobalBasisOutcome: sample size must exceed basis dimension");
  Eigen::MatrixXd design(n, d);
  for (int i = 0; i < n; ++i) {
    design.row(i) = basis_row(data.treatment[i], data.covariates.row(i));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < d) throw std::runtime_error("GlobalBasisOutcome: rank-deficient design");
  coef_ = qr.solve(data.outcomes);
  xtx_inv_ = (design.transpose() * design).ldlt().solve(Eigen::MatrixXd::Identity(d, d));
}

Eigen::RowVectorXd GlobalBasisOutcome::basis_row(double t, const Eigen::RowVectorXd& x) const {
  if (x.size() != p_) throw std::invalid_argument("GlobalBasisOutcome: covariate dim mismatch");
  const int d = 2 * p_ + 4 + (extra_x3sq_ ? 1 : 0);
  Eigen::RowVectorXd row(d);
  row[0] = 1.0;
  row.segment(1, p_) = x;
  row[p_ + 1] = t;
  row[p_ + 2] = t * t;
  row[p_ + 3] = t * t * t;
  row.segment(p_ + 4, p_) = t * x;
  if (extra_x3sq_) row[d - 1] = x[2] * x[2];
  return row;
}

Eigen::VectorXd GlobalBasisOutcome::evaluate(double t, const Eigen::RowVectorXd& x) const {
  return (basis_row(t, x) * coef_).transpose();
}

Eigen::MatrixXd GlobalBasisOutcome::loo_training_predictions(
    const ObservationSet& training) const {
  const int n = training.n();
  Eigen::MatrixXd out(n, m_);
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVectorXd row = basis_row(training.treatment[i], training.covariates.row(i));
    const double leverage = row * xtx_inv_ * row.transpose();
    const Eigen::RowVectorXd fitted = row * coef_;
    if (1.0 - leverage < 1e-12) {
      out.row(i) = fitted;  // interpolation point; exclusion undefined
      continue;
    }
    const Eigen::RowVectorXd resid = training.outcomes.row(i) - fitted;
    out.row(i) = fitted - resid * (leverage / (1.0 - leverage));
  }
  return out;
}

LocalLinearOutcome::LocalLinearOutcome(const ObservationSet& data, double bandwidth)
    : x_(data.covariates), t_(data.treatment), v_(data.outcomes), h_(bandwidth) {
  m_ = data.m();
  grid_kind_ = data.grid_kind;
  if (h_ <= 0.0) h_ = rule_of_thumb_bandwidth(t_);
  if (!(h_ > 0.0)) throw std::invalid_argument("LocalLinearOutcome: bandwidth must be positive");
  const int d = static_cast<int>(x_.cols()) + 2;
  if (data.n() <= d)
    throw std::invalid_argument("LocalLinearOutcome: sample size must exceed local design size");
}

Eigen::VectorXd LocalLinearOutcome::fit_at(double t, const Eigen::RowVectorXd& x,
                                           int exclude) const {
  const int n = static_cast<int>(t_.size());
  const int p = static_cast<int>(x_.cols());
  const int d = p + 2;
  double closest = std::numeric_limits<double>::infinity();
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    if (i == exclude) {
      w[i] = 0.0;
      continue;
    }
    const double u = (t_[i] - t) / h_;
    closest = std::min(closest, std::fabs(u));
    w[i] = normal_pdf(u);
  }
  if (closest > 5.0) throw std::runtime_error("LocalLinearOutcome: zero effective weight");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, m_);
  Eigen::RowVectorXd row(d);
  for (int i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    row[0] = 1.0;
    row.segment(1, p) = x_.row(i);
    row[d - 1] = t_[i] - t;
    a.noalias() += w[i] * row.transpose() * row;
    b.noalias() += w[i] * row.transpose() * v_.row(i);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("LocalLinearOutcome: singular local design");
  const Eigen::MatrixXd coef = ldlt.solve(b);
  Eigen::RowVectorXd query(d);
  query[0] = 1.0;
  query.segment(1, p) = x;
  query[d - 1] = 0.0;
  return (query * coef).transpose();
}

Eigen::VectorXd LocalLinearOutcome::evaluate(double t, const Eigen::RowVectorXd& x) const {
  return fit_at(t, x, -1);
}

Eigen::MatrixXd LocalLinearOutcome::loo_training_predictions(
    const ObservationSet& training) const {
  const int n = training.n();
  Eigen::MatrixXd out(n, m_);
  for (int i = 0; i < n; ++i) {
    out.row(i) = fit_at(training.treatment[i], training.covariates.row(i), i).transpose();
  }
  return out;
}

ZeroOutcome::ZeroOutcome(int m, GridKind kind) {
  m_ = m;
  grid_kind_ = kind;
}

Eigen::MatrixXd ZeroOutcome::loo_training_predictions(const ObservationSet& training) const {
  return Eigen::MatrixXd::Zero(training.n(), m_);
}

std::unique_ptr<OutcomeModel> fit_outcome(const ObservationSet& data,
                                          const OutcomeOptions& options) {
  data.validate();
  switch (options.kind) {
    case OutcomeKind::global_basis:
      return std::make_unique<GlobalBasisOutcome>(data, options.model_a_basis);
    case OutcomeKind::local_linear:
      return std::make_unique<LocalLinearOutcome>(data, options.bandwidth);
    case OutcomeKind::zero:
      return std::make_unique<ZeroOutcome>(data.m(), data.grid_kind);
  }
  throw std::logic_error("fit_outcome: unreachable");
}

}  // namespace objdose
