#include "objdose/estimators.hpp"

#include <cmath>
#include <stdexcept>

#include "objdose/rng.hpp"

namespace objdose {

namespace {

constexpr double kLowEssThreshold = 5.0;

void init_diagnostics(DoseResponseEstimate& est, const Eigen::VectorXd& t_grid, int m) {
  const int nt = static_cast<int>(t_grid.size());
  if (nt < 1) throw std::invalid_argument("estimate: empty treatment grid");
  est.t_grid = t_grid;
  est.theta.setZero(nt, m);
  est.pointwise_se.setZero(nt, m);
  est.effective_sample_size.setZero(nt);
  est.low_ess_flag.assign(nt, 0);
  est.zero_weight_flag.assign(nt, 0);
}

/// Equivalent count of full-weight observations inside the kernel window.
double effective_size(const Eigen::VectorXd& treatment, const Kernel& kernel, double t) {
  double s = 0.0;
  for (int i = 0; i < treatment.size(); ++i) s += kernel.k((treatment[i] - t) / kernel.h);
  return s / kernel.k(0.0);
}

}  // namespace

std::vector<std::vector<int>> FoldPlan::folds() const {
  std::vector<std::vector<int>> out(L);
  for (int i = 0; i < static_cast<int>(assignments.size()); ++i) {
    out[assignments[i]].push_back(i);
  }
  return out;
}

std::vector<int> FoldPlan::complement(int fold) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(assignments.size()); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

FoldPlan make_fold_plan(int n, int L, std::uint64_t seed) {
  if (L < 2 || L > n) throw std::invalid_argument("make_fold_plan: need 2 <= L <= n");
  Rng rng(mix_seed(seed, 0x0f01d));
  const std::vector<int> perm = rng.permutation(n);
  FoldPlan plan;
  plan.L = L;
  plan.seed = seed;
  plan.assignments.assign(n, 0);
  for (int r = 0; r < n; ++r) plan.assignments[perm[r]] = r % L;
  return plan;
}

double default_bandwidth(const ObservationSet& data) {
  const int n = data.n();
  if (n < 2) throw std::invalid_argument("default_bandwidth: need n >= 2");
  const double mean = data.treatment.mean();
  const double var = (data.treatment.array() - mean).square().sum() / (n - 1);
  if (!(var > 0.0)) throw std::invalid_argument("default_bandwidth: zero treatment variance");
  return std::sqrt(var) * std::pow(static_cast<double>(n), -0.3);
}

DoseResponseEstimate estimate_or(const ObservationSet& data, const OutcomeModel& outcome,
                                 const Eigen::VectorXd& t_grid) {
  data.validate();
  if (outcome.output_dim() != data.m())
    throw std::invalid_argument("estimate_or: outcome model grid does not match data");
  const int n = data.n();
  const int m = data.m();
  DoseResponseEstimate est;
  est.estimator_tag = "or";
  est.grid_kind = data.grid_kind;
  init_diagnostics(est, t_grid, m);
  for (int g = 0; g < est.grid_size(); ++g) {
    const double t = t_grid[g];
    Eigen::MatrixXd values(n, m);
    for (int i = 0; i < n; ++i) {
      values.row(i) = outcome.evaluate(t, data.covariates.row(i)).transpose();
    }
    const Eigen::RowVectorXd mean = values.colwise().mean();
    est.theta.row(g) = mean;
    if (n > 1) {
      const Eigen::RowVectorXd var =
          (values.rowwise() - mean).array().square().colwise().sum() / (n - 1);
      est.pointwise_se.row(g) = (var / n).array().sqrt();
    }
    est.effective_sample_size[g] = n;
  }
  return est;
}

DoseResponseEstimate estimate_ipw(const ObservationSet& data, const GpsModel& gps,
                                  const Kernel& kernel, const Eigen::VectorXd& t_grid) {
  data.validate();
  const int n = data.n();
  const int m = data.m();
  DoseResponseEstimate est;
  est.estimator_tag = "ipw";
  est.grid_kind = data.grid_kind;
  est.bandwidth = kernel.h;
  est.kernel_family = kernel.family;
  init_diagnostics(est, t_grid, m);
  const long long trims_before = gps.trim_count();

  Eigen::VectorXd w(n);
  for (int g = 0; g < est.grid_size(); ++g) {
    const double t = t_grid[g];
    for (int i = 0; i < n; ++i) {
      w[i] = kernel.kh(data.treatment[i] - t) / gps.evaluate(t, data.covariates.row(i));
    }
    const double total = w.sum();
    est.effective_sample_size[g] = effective_size(data.treatment, kernel, t);
    if (est.effective_sample_size[g] < kLowEssThreshold) est.low_ess_flag[g] = 1;
    if (!(total > 0.0)) {
      est.zero_weight_flag[g] = 1;
      est.theta.row(g).setConstant(std::numeric_limits<double>::quiet_NaN());
      est.pointwise_se.row(g).setConstant(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const Eigen::RowVectorXd theta = (w.transpose() * data.outcomes) / total;
    est.theta.row(g) = theta;
    // Influence contributions of the ratio estimator: w_i (V_i - theta) / wbar.
    const double wbar = total / n;
    Eigen::RowVectorXd ssq = Eigen::RowVectorXd::Zero(m);
    for (int i = 0; i < n; ++i) {
      const Eigen::RowVectorXd psi = (w[i] / wbar) * (data.outcomes.row(i) - theta);
      ssq.array() += psi.array().square();
    }
    est.pointwise_se.row(g) = (ssq / (static_cast<double>(n) * n)).array().sqrt();
  }
  est.trim_events = gps.trim_count() - trims_before;
  return est;
}

namespace {

/// Shared doubly robust core. `fold_of` maps an observation to its nuisance
/// pair (a single pair for the unsplit estimator), and `weight_of` supplies
/// the averaging weight of each observation (1/n unsplit, 1/(L |I_l|) for
/// cross-fitting).
struct DrContext {
  const ObservationSet& data;
  const Kernel& kernel;
  bool corrector_at_observed_t;
  std::vector<const GpsModel*> gps;          // per fold
  std::vector<const OutcomeModel*> outcome;  // per fold
  const std::vector<int>* fold_of = nullptr; // nullptr -> fold 0 for everyone
  Eigen::VectorXd weights;                   // per observation, sums to 1
};

void dr_fill(DrContext& ctx, DoseResponseEstimate& est) {
  const ObservationSet& data = ctx.data;
  const int n = data.n();
  const int m = data.m();
  for (const OutcomeModel* om : ctx.outcome) {
    if (om->output_dim() != m)
      throw std::invalid_argument("estimate_dr: outcome model grid does not match data");
  }

  // Residual anchor gamma(T_i, X_i) does not depend on the grid point.
  Eigen::MatrixXd gamma_obs;
  if (ctx.corrector_at_observed_t) {
    gamma_obs.resize(n, m);
    for (int i = 0; i < n; ++i) {
      const int f = ctx.fold_of ? (*ctx.fold_of)[i] : 0;
      gamma_obs.row(i) =
          ctx.outcome[f]->evaluate(data.treatment[i], data.covariates.row(i)).transpose();
    }
  }

  Eigen::MatrixXd psi(n, m);
  for (int g = 0; g < est.grid_size(); ++g) {
    const double t = est.t_grid[g];
    for (int i = 0; i < n; ++i) {
      const int f = ctx.fold_of ? (*ctx.fold_of)[i] : 0;
      const Eigen::RowVectorXd xi = data.covariates.row(i);
      const Eigen::RowVectorXd gamma_t = ctx.outcome[f]->evaluate(t, xi).transpose();
      const double kw = ctx.kernel.kh(data.treatment[i] - t) / ctx.gps[f]->evaluate(t, xi);
      const Eigen::RowVectorXd anchor =
          ctx.corrector_at_observed_t ? gamma_obs.row(i) : gamma_t;
      psi.row(i) = gamma_t + kw * (data.outcomes.row(i) - anchor);
    }
    const Eigen::RowVectorXd theta = ctx.weights.transpose() * psi;
    est.theta.row(g) = theta;
    // Weighted influence-function variance; reduces to the sample variance
    // over n for uniform weights.
    Eigen::RowVectorXd ssq = Eigen::RowVectorXd::Zero(m);
    for (int i = 0; i < n; ++i) {
      const Eigen::RowVectorXd dev = psi.row(i) - theta;
      ssq.array() += (ctx.weights[i] * ctx.weights[i]) * dev.array().square();
    }
    const double correction = n > 1 ? static_cast<double>(n) / (n - 1) : 1.0;
    est.pointwise_se.row(g) = (correction * ssq).array().sqrt();
    est.effective_sample_size[g] = effective_size(data.treatment, ctx.kernel, t);
    if (est.effective_sample_size[g] < kLowEssThreshold) est.low_ess_flag[g] = 1;
  }
}

}  // namespace

DoseResponseEstimate estimate_dr(const ObservationSet& data, const GpsModel& gps,
                                 const OutcomeModel& outcome, const Kernel& kernel,
                                 const Eigen::VectorXd& t_grid, bool corrector_at_observed_t) {
  data.validate();
  DoseResponseEstimate est;
  est.estimator_tag = "dr";
  est.grid_kind = data.grid_kind;
  est.bandwidth = kernel.h;
  est.kernel_family = kernel.family;
  init_diagnostics(est, t_grid, data.m());
  const long long trims_before = gps.trim_count();
  DrContext ctx{data, kernel, corrector_at_observed_t, {&gps}, {&outcome}, nullptr,
                Eigen::VectorXd::Constant(data.n(), 1.0 / data.n())};
  dr_fill(ctx, est);
  est.trim_events = gps.trim_count() - trims_before;
  return est;
}

CrossFitModels fit_cross_fit_nuisances(const ObservationSet& data, const FoldPlan& plan,
                                       const NuisanceSpec& nuisance) {
  data.validate();
  if (static_cast<int>(plan.assignments.size()) != data.n())
    throw std::invalid_argument("fit_cross_fit_nuisances: fold plan does not match data");
  CrossFitModels models;
  models.plan = plan;
  models.gps.resize(plan.L);
  models.outcome.resize(plan.L);
  for (int l = 0; l < plan.L; ++l) {
    const std::vector<int> train_idx = plan.complement(l);
    const ObservationSet train = data.subset(train_idx);
    try {
      models.gps[l] = fit_gps(train, nuisance.gps);
      models.outcome[l] = fit_outcome(train, nuisance.outcome);
    } catch (const std::exception& e) {
      throw std::runtime_error("estimate_cf: fold " + std::to_string(l) +
                               " training failed: " + e.what());
    }
  }
  return models;
}

DoseResponseEstimate estimate_cf(const ObservationSet& data, const FoldPlan& plan,
                                 const NuisanceSpec& nuisance, const Kernel& kernel,
                                 const Eigen::VectorXd& t_grid, bool corrector_at_observed_t) {
  const CrossFitModels models = fit_cross_fit_nuisances(data, plan, nuisance);
  return estimate_cf(data, models, kernel, t_grid, corrector_at_observed_t);
}

DoseResponseEstimate estimate_cf(const ObservationSet& data, const CrossFitModels& models,
                                 const Kernel& kernel, const Eigen::VectorXd& t_grid,
                                 bool corrector_at_observed_t) {
  data.validate();
  const FoldPlan& plan = models.plan;
  const int n = data.n();
  if (static_cast<int>(plan.assignments.size()) != n)
    throw std::invalid_argument("estimate_cf: fold plan does not match data");

  DoseResponseEstimate est;
  est.estimator_tag = "cf";
  est.grid_kind = data.grid_kind;
  est.bandwidth = kernel.h;
  est.kernel_family = kernel.family;
  init_diagnostics(est, t_grid, data.m());

  const auto folds = plan.folds();
  long long trims_before = 0;
  for (int l = 0; l < plan.L; ++l) trims_before += models.gps[l]->trim_count();

  DrContext ctx{data, kernel, corrector_at_observed_t, {}, {}, &plan.assignments,
                Eigen::VectorXd(n)};
  for (int l = 0; l < plan.L; ++l) {
    ctx.gps.push_back(models.gps[l].get());
    ctx.outcome.push_back(models.outcome[l].get());
    if (folds[l].empty())
      throw std::invalid_argument("estimate_cf: fold " + std::to_string(l) + " is empty");
    for (int i : folds[l]) {
      ctx.weights[i] = 1.0 / (static_cast<double>(plan.L) * folds[l].size());
    }
  }
  dr_fill(ctx, est);
  long long trims_after = 0;
  for (int l = 0; l < plan.L; ++l) trims_after += models.gps[l]->trim_count();
  est.trim_events = trims_after - trims_before;
  return est;
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::outcome_regression: return "or";
    case EstimatorKind::ipw: return "ipw";
    case EstimatorKind::dr: return "dr";
    case EstimatorKind::cf: return "cf";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(const std::string& name) {
  if (name == "or") return EstimatorKind::outcome_regression;
  if (name == "ipw") return EstimatorKind::ipw;
  if (name == "dr") return EstimatorKind::dr;
  if (name == "cf") return EstimatorKind::cf;
  throw std::invalid_argument("unknown estimator: " + name);
}

Kernel resolve_kernel(const EstimatorSpec& spec, const ObservationSet& data) {
  const double h = spec.kernel_h > 0.0 ? spec.kernel_h : default_bandwidth(data);
  return Kernel(spec.kernel_family, h);
}

DoseResponseEstimate run_estimator(const ObservationSet& data, const EstimatorSpec& spec,
                                   const Eigen::VectorXd& t_grid) {
  DoseResponseEstimate est;
  switch (spec.kind) {
    case EstimatorKind::outcome_regression: {
      const auto outcome = fit_outcome(data, spec.nuisance.outcome);
      est = estimate_or(data, *outcome, t_grid);
      break;
    }
    case EstimatorKind::ipw: {
      const auto gps = fit_gps(data, spec.nuisance.gps);
      est = estimate_ipw(data, *gps, resolve_kernel(spec, data), t_grid);
      break;
    }
    case EstimatorKind::dr: {
      const auto gps = fit_gps(data, spec.nuisance.gps);
      const auto outcome = fit_outcome(data, spec.nuisance.outcome);
      est = estimate_dr(data, *gps, *outcome, resolve_kernel(spec, data), t_grid,
                        spec.corrector_at_observed_t);
      break;
    }
    case EstimatorKind::cf: {
      const FoldPlan plan = make_fold_plan(data.n(), spec.folds, spec.fold_seed);
      est = estimate_cf(data, plan, spec.nuisance, resolve_kernel(spec, data), t_grid,
                        spec.corrector_at_observed_t);
      break;
    }
  }
  est.estimator_tag = spec.label();
  return est;
}

}  // namespace objdose
