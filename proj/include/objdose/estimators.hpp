#ifndef OBJDOSE_ESTIMATORS_HPP
#define OBJDOSE_ESTIMATORS_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "objdose/kernels.hpp"
#include "objdose/nuisance.hpp"
#include "objdose/observations.hpp"

namespace objdose {

/// Dose-response estimate over a treatment grid: one embedded outcome per
/// grid point, influence-function standard errors, and per-point diagnostics.
struct DoseResponseEstimate {
  Eigen::VectorXd t_grid;
  Eigen::MatrixXd theta;         // |t_grid| x M
  GridKind grid_kind = GridKind::probability_grid;
  Eigen::MatrixXd pointwise_se;  // |t_grid| x M
  Eigen::MatrixXd bias_proxy;    // |t_grid| x M, empty unless diagnostics requested
  std::string estimator_tag;
  double bandwidth = std::numeric_limits<double>::quiet_NaN();  // NaN for OR
  KernelFamily kernel_family = KernelFamily::gaussian;
  Eigen::VectorXd effective_sample_size;  // per grid point, in (0, n]
  std::vector<char> low_ess_flag;         // effective size < 5
  std::vector<char> zero_weight_flag;     // IPW grid points with no kernel mass
  long long trim_events = 0;              // floored GPS evaluations during estimation

  int grid_size() const { return static_cast<int>(t_grid.size()); }
  int m() const { return static_cast<int>(theta.cols()); }
};

/// Balanced random partition of observation indices into L folds.
struct FoldPlan {
  int L = 0;
  std::vector<int> assignments;  // index -> fold id
  std::uint64_t seed = 0;

  std::vector<std::vector<int>> folds() const;
  std::vector<int> complement(int fold) const;
};

FoldPlan make_fold_plan(int n, int L, std::uint64_t seed);

/// Undersmoothing default h = sd(T) * n^-0.3, so that sqrt(nh) h^2 -> 0 and
/// the smoothing bias term is asymptotically negligible in the bands.
double default_bandwidth(const ObservationSet& data);

/// Plug-in outcome-regression estimator: theta_t = mean_i gamma(t, X_i).
DoseResponseEstimate estimate_or(const ObservationSet& data, const OutcomeModel& outcome,
                                 const Eigen::VectorXd& t_grid);

/// Self-normalized inverse probability weighting with kernel localization.
DoseResponseEstimate estimate_ipw(const ObservationSet& data, const GpsModel& gps,
                                  const Kernel& kernel, const Eigen::VectorXd& t_grid);

/// Doubly robust estimator:
///   theta_t = mean_i { gamma(t,X_i) + K_h(T_i-t)/f(t|X_i) [V_i - gamma(.,X_i)] }.
/// The correction residual uses gamma(t, X_i) by default; with
/// corrector_at_observed_t it uses gamma(T_i, X_i).
DoseResponseEstimate estimate_dr(const ObservationSet& data, const GpsModel& gps,
                                 const OutcomeModel& outcome, const Kernel& kernel,
                                 const Eigen::VectorXd& t_grid,
                                 bool corrector_at_observed_t = false);

struct NuisanceSpec {
  GpsOptions gps;
  OutcomeOptions outcome;
};

/// Per-fold nuisance models, each fitted on the complement of its fold.
struct CrossFitModels {
  FoldPlan plan;
  std::vector<std::unique_ptr<GpsModel>> gps;
  std::vector<std::unique_ptr<OutcomeModel>> outcome;

  int folds() const { return static_cast<int>(gps.size()); }
};

CrossFitModels fit_cross_fit_nuisances(const ObservationSet& data, const FoldPlan& plan,
                                       const NuisanceSpec& nuisance);

/// Cross-fitted doubly robust estimator: nuisances for fold l are fitted on
/// the complement of I_l; each inner sum is normalized by |I_l| so the
/// estimator averages fold means and reduces to the unsplit doubly robust
/// form when all folds share the same nuisance fits.
DoseResponseEstimate estimate_cf(const ObservationSet& data, const FoldPlan& plan,
                                 const NuisanceSpec& nuisance, const Kernel& kernel,
                                 const Eigen::VectorXd& t_grid,
                                 bool corrector_at_observed_t = false);

/// Variant over already-fitted fold models (fold assignment taken from plan).
DoseResponseEstimate estimate_cf(const ObservationSet& data, const CrossFitModels& models,
                                 const Kernel& kernel, const Eigen::VectorXd& t_grid,
                                 bool corrector_at_observed_t = false);

enum class EstimatorKind { outcome_regression, ipw, dr, cf };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(const std::string& name);  // "or", "ipw", "dr", "cf"

/// Complete recipe for producing a dose-response estimate from data.
struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::cf;
  NuisanceSpec nuisance;
  KernelFamily kernel_family = KernelFamily::gaussian;
  double kernel_h = 0.0;  // 0 = automatic bandwidth
  int folds = 5;
  bool corrector_at_observed_t = false;
  std::uint64_t fold_seed = 0;
  std::string name;  // arm label; defaults to the kind string

  std::string label() const { return name.empty() ? to_string(kind) : name; }
};

Kernel resolve_kernel(const EstimatorSpec& spec, const ObservationSet& data);

/// Fits the nuisances required by the spec and runs the estimator.
DoseResponseEstimate run_estimator(const ObservationSet& data, const EstimatorSpec& spec,
                                   const Eigen::VectorXd& t_grid);

}  // namespace objdose

#endif
