#ifndef OBJDOSE_SIMLAB_HPP
#define OBJDOSE_SIMLAB_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "objdose/estimators.hpp"
#include "objdose/observations.hpp"

namespace objdose {

/// Data generating process for the simulation laboratory: three treatment
/// scenarios over a shared six-column covariate law, paired with outcome
/// model A (Gaussian quantile functions) or B (randomly transported versions
/// of the same distributions).
struct DgpSpec {
  int gps_scenario = 1;      // 1, 2, or 3
  char outcome_model = 'A';  // 'A' or 'B'
  int n = 1000;
  double sigma = 1.0;
  std::uint64_t seed = 1;
  int grid_m = 100;

  void validate() const;
};

/// Columns: X1..X4 iid standard normal, X5 uniform on {-2, 2},
/// X6 uniform on (-3, 3).
Eigen::MatrixXd gen_covariates(int n, std::uint64_t seed);

/// Cardinal function r(X) = -0.8 + (0.1, 0.1, -0.1, 0.2, 0.1, 0.1)' X.
double treatment_cardinal(const Eigen::RowVectorXd& x);

/// Scenario 1: T = 0.9 r(X) + 1 + N(0, sd 0.5)
/// Scenario 2: T = 0.5 r(X) + 0.2 + t(2)
/// Scenario 3: T = 0.7 log(max(r(X), 0.05)) + 1.3 + N(0, sd 1)
Eigen::VectorXd gen_treatment(const Eigen::MatrixXd& covariates, int scenario,
                              std::uint64_t seed);

/// Conditional mean of the outcome location:
/// gamma(t, x) = 1 - (0.2,0.2,0.3,-0.1,0.2,0.2)'x
///             - t (0.1 - 0.1 x1 + 0.1 x4 + 0.1 x5 + 0.1 x3^2) + 0.1 t^3.
double model_a_gamma(double t, const Eigen::RowVectorXd& x);

/// Transport map T_k(x) = x - sin(k pi x)/|k pi|; nondecreasing for all k.
double transport_map(int k, double x);

/// One quantile function per row on the M-point midpoint grid. Model A:
/// mu_i + sigma Phi^-1(p). Model B: transport of the model-A function by a
/// map drawn uniformly from k in {-2, -1, 1, 2}.
Eigen::MatrixXd gen_outcomes(const Eigen::MatrixXd& covariates,
                             const Eigen::VectorXd& treatment, char model, double sigma, int m,
                             std::uint64_t seed);

/// Full draw with substream seeds for covariates, treatment, and outcomes.
ObservationSet generate_dataset(const DgpSpec& spec);

/// Analytic embedded dose-response for model A:
/// 1 - 0.2 t + 0.1 t^3 + sigma Phi^-1(p). Throws for model B.
Eigen::VectorXd true_theta(double t, char model, double sigma, int m);

/// Brute-force oracle for either model: average embedded outcome at fixed t
/// over fresh covariate (and transport) draws.
Eigen::VectorXd mc_true_theta(double t, char model, double sigma, int m, int n_oracle,
                              std::uint64_t seed);

// ---------------------------------------------------------------------------
// Monte Carlo replication runner
// ---------------------------------------------------------------------------

struct McOptions {
  std::vector<std::string> metrics = {"mise", "loo_mse"};
  double alpha = 0.05;       // for coverage / band width metrics
  int threads = 1;
  int oracle_draws = 200000; // model-B truth oracle sample size
};

struct McRow {
  int replication = 0;
  std::string estimator;
  std::vector<std::pair<std::string, double>> values;
  bool failed = false;
  std::string error;
};

struct McSummary {
  std::string estimator;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;  // NaN when only one replication contributed
  int count = 0;
};

struct McReport {
  DgpSpec dgp;
  int B_mc = 0;
  Eigen::VectorXd t_grid;
  std::vector<std::string> metrics;
  std::vector<std::string> estimator_names;
  std::vector<McRow> rows;  // replication-major, arm-minor
  std::vector<McSummary> summaries;
  int failures = 0;

  const McSummary* find_summary(const std::string& estimator, const std::string& metric) const;
};

/// Runs B_mc replications: generate data, run every estimator arm, compute
/// the requested metrics (mise and leave-one-out MSE against analytic or
/// Monte Carlo truth, pointwise coverage and band width at the median grid
/// point). Per-arm failures are recorded, not fatal. Deterministic given the
/// seed, for any thread count.
McReport run_monte_carlo(const DgpSpec& dgp, const std::vector<EstimatorSpec>& arms,
                         const McOptions& options, int B_mc, const Eigen::VectorXd& t_grid);

}  // namespace objdose

#endif
