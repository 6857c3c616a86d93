#ifndef OBJDOSE_NUISANCE_HPP
#define OBJDOSE_NUISANCE_HPP

#include <Eigen/Core>
#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "objdose/hilbert.hpp"
#include "objdose/observations.hpp"

namespace objdose {

// ---------------------------------------------------------------------------
// Generalized propensity score f_{T|X}
// ---------------------------------------------------------------------------

enum class GpsKind { linear_gaussian, kernel_conditional, constant };

std::string to_string(GpsKind kind);
GpsKind parse_gps_kind(const std::string& name);

struct GpsOptions {
  GpsKind kind = GpsKind::linear_gaussian;
  double floor = 1e-3;                       // positivity trim
  double treatment_bandwidth = 0.0;          // kernel_conditional; 0 = rule of thumb
  std::vector<double> covariate_bandwidths;  // kernel_conditional; empty = rule of thumb
  double constant_value = 0.5;               // flat density for the misspecified model
};

/// Fitted conditional density of T given X, evaluable at arbitrary (t, x).
/// Immutable after fitting; safe to evaluate concurrently. evaluate() floors
/// the density at the positivity trim and counts floored calls.
class GpsModel {
 public:
  virtual ~GpsModel() = default;

  /// Raw fitted density, not floored.
  virtual double density(double t, const Eigen::RowVectorXd& x) const = 0;
  virtual std::string kind_name() const = 0;

  double floor() const { return floor_; }
  long long trim_count() const { return trims_.load(std::memory_order_relaxed); }
  void reset_trim_count() const { trims_.store(0, std::memory_order_relaxed); }

  double evaluate(double t, const Eigen::RowVectorXd& x) const {
    const double f = density(t, x);
    if (f < floor_) {
      trims_.fetch_add(1, std::memory_order_relaxed);
      return floor_;
    }
    return f;
  }

 protected:
  double floor_ = 1e-3;
  mutable std::atomic<long long> trims_{0};
};

/// OLS of T on (1, X) with Gaussian residuals: f(t|x) is the normal density
/// with mean from the linear prediction and the residual standard deviation.
class LinearGaussianGps : public GpsModel {
 public:
  LinearGaussianGps(Eigen::VectorXd beta, double sigma, double floor, int n_train);

  double density(double t, const Eigen::RowVectorXd& x) const override;
  std::string kind_name() const override { return "linear_gaussian"; }

  double conditional_mean(const Eigen::RowVectorXd& x) const;
  double sigma() const { return sigma_; }
  const Eigen::VectorXd& beta() const { return beta_; }
  int n_train() const { return n_train_; }

 private:
  Eigen::VectorXd beta_;  // intercept first
  double sigma_;
  int n_train_;
};

/// Nadaraya-Watson conditional density with a product kernel over covariates:
/// Gaussian factors for continuous coordinates, exact-match indicators for
/// coordinates flagged discrete.
class KernelConditionalGps : public GpsModel {
 public:
  KernelConditionalGps(Eigen::MatrixXd x, Eigen::VectorXd t, double treatment_bandwidth,
                       Eigen::VectorXd covariate_bandwidths, std::vector<bool> discrete,
                       double floor);

  double density(double t, const Eigen::RowVectorXd& x) const override;
  std::string kind_name() const override { return "kernel_conditional"; }

  double treatment_bandwidth() const { return h_t_; }
  const Eigen::VectorXd& covariate_bandwidths() const { return h_x_; }

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd t_;
  double h_t_;
  Eigen::VectorXd h_x_;
  std::vector<bool> discrete_;
};

/// Deliberately misspecified flat density; the "wrong GPS" arm of the
/// double-robustness harness.
class ConstantGps : public GpsModel {
 public:
  ConstantGps(double value, double floor);
  double density(double, const Eigen::RowVectorXd&) const override { return value_; }
  std::string kind_name() const override { return "constant"; }

 private:
  double value_;
};

std::unique_ptr<GpsModel> fit_gps(const ObservationSet& data, const GpsOptions& options);

/// Floored evaluation, tracked on the model (Assumption-5 positivity trim).
inline double evaluate_gps(const GpsModel& model, double t, const Eigen::RowVectorXd& x) {
  return model.evaluate(t, x);
}

/// Average log f(T_i|X_i) over a dataset; used to compare fit quality across
/// scenarios in the misspecification harness.
double mean_log_density(const GpsModel& model, const ObservationSet& data);

// ---------------------------------------------------------------------------
// Embedded outcome regression gamma(t, x) = E(V | T = t, X = x)
// ---------------------------------------------------------------------------

enum class OutcomeKind { global_basis, local_linear, zero };

std::string to_string(OutcomeKind kind);
OutcomeKind parse_outcome_kind(const std::string& name);

struct OutcomeOptions {
  OutcomeKind kind = OutcomeKind::global_basis;
  bool model_a_basis = false;  // add the x3^2 feature column
  double bandwidth = 0.0;      // local_linear; 0 = rule of thumb
};

/// Fitted embedded outcome regression. evaluate() returns the regression
/// value on the training grid, deliberately NOT projected onto the image of
/// the object space: projection happens once, at final pull-back, because the
/// doubly robust formulas are linear in gamma-hat.
class OutcomeModel {
 public:
  virtual ~OutcomeModel() = default;

  virtual Eigen::VectorXd evaluate(double t, const Eigen::RowVectorXd& x) const = 0;
  virtual std::string kind_name() const = 0;

  /// Predictions at the training points with each observation excluded from
  /// its own fit. `training` must be the data the model was fitted on.
  virtual Eigen::MatrixXd loo_training_predictions(const ObservationSet& training) const = 0;

  int output_dim() const { return m_; }
  GridKind grid_kind() const { return grid_kind_; }

 protected:
  int m_ = 0;
  GridKind grid_kind_ = GridKind::probability_grid;
};

/// Coordinate-wise least squares on the feature vector
/// (1, x, t, t^2, t^3, t*x [, x3^2]).
class GlobalBasisOutcome : public OutcomeModel {
 public:
  GlobalBasisOutcome(const ObservationSet& data, bool model_a_basis);

  Eigen::VectorXd evaluate(double t, const Eigen::RowVectorXd& x) const override;
  std::string kind_name() const override { return "global_basis"; }
  Eigen::MatrixXd loo_training_predictions(const ObservationSet& training) const override;

  Eigen::RowVectorXd basis_row(double t, const Eigen::RowVectorXd& x) const;
  int basis_dim() const { return static_cast<int>(coef_.rows()); }
  const Eigen::MatrixXd& coefficients() const { return coef_; }

 private:
  Eigen::MatrixXd coef_;     // basis dim x M
  Eigen::MatrixXd xtx_inv_;  // for leverages
  bool extra_x3sq_ = false;
  int p_ = 0;
};

/// Local linear smoother in t: weighted regression of V on (1, x, T_i - t)
/// with weights K_h(T_i - t), evaluated at the query point.
class LocalLinearOutcome : public OutcomeModel {
 public:
  LocalLinearOutcome(const ObservationSet& data, double bandwidth);

  Eigen::VectorXd evaluate(double t, const Eigen::RowVectorXd& x) const override;
  std::string kind_name() const override { return "local_linear"; }
  Eigen::MatrixXd loo_training_predictions(const ObservationSet& training) const override;

  double bandwidth() const { return h_; }

 private:
  Eigen::VectorXd fit_at(double t, const Eigen::RowVectorXd& x, int exclude) const;

  Eigen::MatrixXd x_;
  Eigen::VectorXd t_;
  Eigen::MatrixXd v_;
  double h_;
};

/// gamma-hat identically zero; the "wrong outcome model" arm of the
/// double-robustness harness.
class ZeroOutcome : public OutcomeModel {
 public:
  ZeroOutcome(int m, GridKind kind);
  Eigen::VectorXd evaluate(double, const Eigen::RowVectorXd&) const override {
    return Eigen::VectorXd::Zero(m_);
  }
  std::string kind_name() const override { return "zero"; }
  Eigen::MatrixXd loo_training_predictions(const ObservationSet& training) const override;
};

std::unique_ptr<OutcomeModel> fit_outcome(const ObservationSet& data,
                                          const OutcomeOptions& options);

inline HilbertVector evaluate_outcome(const OutcomeModel& model, double t,
                                      const Eigen::RowVectorXd& x) {
  return {model.evaluate(t, x), model.grid_kind()};
}

/// Rule-of-thumb kernel bandwidth for a single column.
double rule_of_thumb_bandwidth(const Eigen::VectorXd& column);

}  // namespace objdose

#endif
