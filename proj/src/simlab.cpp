#include "objdose/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "objdose/embedding.hpp"
#include "objdose/inference.hpp"
#include "objdose/parallel.hpp"
#include "objdose/rng.hpp"

namespace objdose {

namespace {
constexpr double kLogClamp = 0.05;  // scenario-3 floor for log(r(X))

const double kOutcomeCoef[6] = {0.2, 0.2, 0.3, -0.1, 0.2, 0.2};
const double kCardinalCoef[6] = {0.1, 0.1, -0.1, 0.2, 0.1, 0.1};
}  // namespace

void DgpSpec::validate() const {
  if (gps_scenario < 1 || gps_scenario > 3)
    throw std::invalid_argument("DgpSpec: gps_scenario must be 1, 2, or 3");
  if (outcome_model != 'A' && outcome_model != 'B')
    throw std::invalid_argument("DgpSpec: outcome_model must be 'A' or 'B'");
  if (n < 10) throw std::invalid_argument("DgpSpec: n must be >= 10");
  if (sigma < 0.0) throw std::invalid_argument("DgpSpec: sigma must be nonnegative");
  if (grid_m < 2) throw std::invalid_argument("DgpSpec: grid_m must be >= 2");
}

Eigen::MatrixXd gen_covariates(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_covariates: n must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd x(n, 6);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.normal();
    x(i, 4) = rng.uniform() < 0.5 ? -2.0 : 2.0;
    x(i, 5) = rng.uniform(-3.0, 3.0);
  }
  return x;
}

double treatment_cardinal(const Eigen::RowVectorXd& x) {
  if (x.size() != 6) throw std::invalid_argument("treatment_cardinal: need 6 covariates");
  double r = -0.8;
  for (int j = 0; j < 6; ++j) r += kCardinalCoef[j] * x[j];
  return r;
}

Eigen::VectorXd gen_treatment(const Eigen::MatrixXd& covariates, int scenario,
                              std::uint64_t seed) {
  if (covariates.cols() != 6) throw std::invalid_argument("gen_treatment: need 6 covariates");
  if (scenario < 1 || scenario > 3)
    throw std::invalid_argument("gen_treatment: scenario must be 1, 2, or 3");
  const int n = static_cast<int>(covariates.rows());
  Rng rng(seed);
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) {
    const double r = treatment_cardinal(covariates.row(i));
    switch (scenario) {
      case 1:
        t[i] = 0.9 * r + 1.0 + 0.5 * rng.normal();
        break;
      case 2:
        t[i] = 0.5 * r + 0.2 + rng.student_t2();
        break;
      case 3:
        t[i] = 0.7 * std::log(std::max(r, kLogClamp)) + 1.3 + rng.normal();
        break;
    }
  }
  return t;
}

double model_a_gamma(double t, const Eigen::RowVectorXd& x) {
  if (x.size() != 6) throw std::invalid_argument("model_a_gamma: need 6 covariates");
  double linear = 0.0;
  for (int j = 0; j < 6; ++j) linear += kOutcomeCoef[j] * x[j];
  const double slope = 0.1 - 0.1 * x[0] + 0.1 * x[3] + 0.1 * x[4] + 0.1 * x[2] * x[2];
  return 1.0 - linear - t * slope + 0.1 * t * t * t;
}

double transport_map(int k, double x) {
  const double kpi = k * M_PI;
  return x - std::sin(kpi * x) / std::fabs(kpi);
}

Eigen::MatrixXd gen_outcomes(const Eigen::MatrixXd& covariates,
                             const Eigen::VectorXd& treatment, char model, double sigma, int m,
                             std::uint64_t seed) {
  if (covariates.rows() != treatment.size())
    throw std::invalid_argument("gen_outcomes: length mismatch");
  if (m < 2) throw std::invalid_argument("gen_outcomes: grid length must be >= 2");
  if (model != 'A' && model != 'B') throw std::invalid_argument("gen_outcomes: unknown model");
  const int n = static_cast<int>(treatment.size());
  const Eigen::VectorXd grid = probability_grid(m);
  Eigen::VectorXd base(m);
  for (int j = 0; j < m; ++j) base[j] = sigma * normal_quantile(grid[j]);

  static const int kChoices[4] = {-2, -1, 1, 2};
  Rng rng(seed);
  Eigen::MatrixXd out(n, m);
  for (int i = 0; i < n; ++i) {
    const double mu = model_a_gamma(treatment[i], covariates.row(i));
    if (model == 'A') {
      out.row(i) = (base.array() + mu).transpose();
    } else {
      const int k = kChoices[rng.uniform_int(0, 3)];
      for (int j = 0; j < m; ++j) out(i, j) = transport_map(k, mu + base[j]);
    }
    for (int j = 1; j < m; ++j) {
      if (out(i, j) < out(i, j - 1) - 1e-12)
        throw std::runtime_error("gen_outcomes: produced a non-monotone quantile vector");
    }
  }
  return out;
}

ObservationSet generate_dataset(const DgpSpec& spec) {
  spec.validate();
  ObservationSet data;
  data.covariates = gen_covariates(spec.n, mix_seed(spec.seed, 1));
  data.treatment = gen_treatment(data.covariates, spec.gps_scenario, mix_seed(spec.seed, 2));
  data.outcomes = gen_outcomes(data.covariates, data.treatment, spec.outcome_model, spec.sigma,
                               spec.grid_m, mix_seed(spec.seed, 3));
  data.grid_kind = GridKind::probability_grid;
  data.discrete_columns.assign(6, false);
  data.discrete_columns[4] = true;  // X5 lives on {-2, 2}
  return data;
}

Eigen::VectorXd true_theta(double t, char model, double sigma, int m) {
  if (model != 'A')
    throw std::invalid_argument("true_theta: closed form exists only for model A");
  const Eigen::VectorXd grid = probability_grid(m);
  Eigen::VectorXd theta(m);
  const double level = 1.0 - 0.2 * t + 0.1 * t * t * t;
  for (int j = 0; j < m; ++j) theta[j] = level + sigma * normal_quantile(grid[j]);
  return theta;
}

Eigen::VectorXd mc_true_theta(double t, char model, double sigma, int m, int n_oracle,
                              std::uint64_t seed) {
  if (model != 'A' && model != 'B') throw std::invalid_argument("mc_true_theta: unknown model");
  if (n_oracle < 1) throw std::invalid_argument("mc_true_theta: n_oracle must be >= 1");
  const Eigen::VectorXd grid = probability_grid(m);
  Eigen::VectorXd base(m);
  for (int j = 0; j < m; ++j) base[j] = sigma * normal_quantile(grid[j]);

  static const int kChoices[4] = {-2, -1, 1, 2};
  Rng rng(seed);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
  Eigen::RowVectorXd x(6);
  for (int i = 0; i < n_oracle; ++i) {
    for (int j = 0; j < 4; ++j) x[j] = rng.normal();
    x[4] = rng.uniform() < 0.5 ? -2.0 : 2.0;
    x[5] = rng.uniform(-3.0, 3.0);
    const double mu = model_a_gamma(t, x);
    if (model == 'A') {
      sum.array() += mu + base.array();
    } else {
      const int k = kChoices[rng.uniform_int(0, 3)];
      for (int j = 0; j < m; ++j) sum[j] += transport_map(k, mu + base[j]);
    }
  }
  return sum / static_cast<double>(n_oracle);
}

// ---------------------------------------------------------------------------
// Monte Carlo runner
// ---------------------------------------------------------------------------

namespace {

ObjectTag tag_for_kind(GridKind kind) {
  switch (kind) {
    case GridKind::probability_grid: return ObjectTag::quantile;
    case GridKind::matrix_coords: return ObjectTag::spd;
    case GridKind::ambient_coords: return ObjectTag::sphere;
    case GridKind::empirical_feature: break;
  }
  throw std::invalid_argument("no pull-back for empirical feature coordinates");
}

Eigen::RowVectorXd project_row(const Eigen::RowVectorXd& row, GridKind kind) {
  if (kind == GridKind::empirical_feature) return row;
  const HilbertVector proj = project_to_image({row.transpose(), kind}, tag_for_kind(kind));
  return proj.values.transpose();
}

struct ArmRun {
  DoseResponseEstimate estimate;
  std::unique_ptr<GpsModel> gps;
  std::unique_ptr<OutcomeModel> outcome;
  FoldPlan plan;
  CrossFitModels cf_models;
  Kernel kernel{KernelFamily::gaussian, 1.0};
  bool has_kernel = false;
};

ArmRun run_arm(const ObservationSet& data, const EstimatorSpec& spec,
               const Eigen::VectorXd& t_grid, bool need_band_models) {
  ArmRun run;
  switch (spec.kind) {
    case EstimatorKind::outcome_regression:
      run.outcome = fit_outcome(data, spec.nuisance.outcome);
      run.estimate = estimate_or(data, *run.outcome, t_grid);
      break;
    case EstimatorKind::ipw:
      run.gps = fit_gps(data, spec.nuisance.gps);
      run.kernel = resolve_kernel(spec, data);
      run.has_kernel = true;
      run.estimate = estimate_ipw(data, *run.gps, run.kernel, t_grid);
      break;
    case EstimatorKind::dr:
      run.gps = fit_gps(data, spec.nuisance.gps);
      run.outcome = fit_outcome(data, spec.nuisance.outcome);
      run.kernel = resolve_kernel(spec, data);
      run.has_kernel = true;
      run.estimate = estimate_dr(data, *run.gps, *run.outcome, run.kernel, t_grid,
                                 spec.corrector_at_observed_t);
      break;
    case EstimatorKind::cf:
      run.plan = make_fold_plan(data.n(), spec.folds, spec.fold_seed);
      run.cf_models = fit_cross_fit_nuisances(data, run.plan, spec.nuisance);
      run.kernel = resolve_kernel(spec, data);
      run.has_kernel = true;
      run.estimate = estimate_cf(data, run.cf_models, run.kernel, t_grid,
                                 spec.corrector_at_observed_t);
      break;
  }
  run.estimate.estimator_tag = spec.label();
  if (need_band_models) {
    if (!run.gps) run.gps = fit_gps(data, spec.nuisance.gps);
    if (!run.outcome) run.outcome = fit_outcome(data, spec.nuisance.outcome);
    if (!run.has_kernel) {
      run.kernel = resolve_kernel(spec, data);
      run.has_kernel = true;
    }
  }
  return run;
}

/// Leave-one-out predictions of each observation's embedded outcome under the
/// arm's prediction rule: the refitted outcome regression for OR/DR, the
/// held-out fold's regression for CF, and the i-excluded self-normalized
/// kernel average for IPW.
Eigen::MatrixXd loo_predictions(const ObservationSet& data, const EstimatorSpec& spec,
                                const ArmRun& run) {
  const int n = data.n();
  const int m = data.m();
  switch (spec.kind) {
    case EstimatorKind::outcome_regression:
    case EstimatorKind::dr:
      return run.outcome->loo_training_predictions(data);
    case EstimatorKind::cf: {
      Eigen::MatrixXd out(n, m);
      for (int i = 0; i < n; ++i) {
        const int fold = run.plan.assignments[i];
        out.row(i) = run.cf_models.outcome[fold]
                         ->evaluate(data.treatment[i], data.covariates.row(i))
                         .transpose();
      }
      return out;
    }
    case EstimatorKind::ipw: {
      Eigen::MatrixXd weights(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          weights(i, j) =
              i == j ? 0.0
                     : run.kernel.kh(data.treatment[j] - data.treatment[i]) /
                           run.gps->evaluate(data.treatment[i], data.covariates.row(j));
        }
      }
      Eigen::MatrixXd out = weights * data.outcomes;
      const Eigen::VectorXd totals = weights.rowwise().sum();
      for (int i = 0; i < n; ++i) {
        if (totals[i] > 0.0) {
          out.row(i) /= totals[i];
        } else {
          out.row(i).setConstant(std::numeric_limits<double>::quiet_NaN());
        }
      }
      return out;
    }
  }
  throw std::logic_error("loo_predictions: unreachable");
}

}  // namespace

const McSummary* McReport::find_summary(const std::string& estimator,
                                        const std::string& metric) const {
  for (const auto& s : summaries) {
    if (s.estimator == estimator && s.metric == metric) return &s;
  }
  return nullptr;
}

McReport run_monte_carlo(const DgpSpec& dgp, const std::vector<EstimatorSpec>& arms,
                         const McOptions& options, int B_mc, const Eigen::VectorXd& t_grid) {
  dgp.validate();
  if (B_mc < 1) throw std::invalid_argument("run_monte_carlo: B_mc must be >= 1");
  if (arms.empty()) throw std::invalid_argument("run_monte_carlo: no estimator arms");
  if (t_grid.size() < 1) throw std::invalid_argument("run_monte_carlo: empty t grid");
  for (const auto& metric : options.metrics) {
    if (metric != "mise" && metric != "loo_mse" && metric != "coverage" &&
        metric != "band_width")
      throw std::invalid_argument("run_monte_carlo: unknown metric " + metric);
  }
  const bool want_mise =
      std::find(options.metrics.begin(), options.metrics.end(), "mise") != options.metrics.end();
  const bool want_loo = std::find(options.metrics.begin(), options.metrics.end(), "loo_mse") !=
                        options.metrics.end();
  const bool want_coverage = std::find(options.metrics.begin(), options.metrics.end(),
                                       "coverage") != options.metrics.end();
  const bool want_width = std::find(options.metrics.begin(), options.metrics.end(),
                                    "band_width") != options.metrics.end();
  const bool want_band = want_coverage || want_width;

  McReport report;
  report.dgp = dgp;
  report.B_mc = B_mc;
  report.t_grid = t_grid;
  report.metrics = options.metrics;
  for (const auto& arm : arms) report.estimator_names.push_back(arm.label());

  const int nt = static_cast<int>(t_grid.size());
  const int m = dgp.grid_m;
  Eigen::MatrixXd truth;
  if (want_mise || want_coverage) {
    truth.resize(nt, m);
    for (int g = 0; g < nt; ++g) {
      if (dgp.outcome_model == 'A') {
        truth.row(g) = true_theta(t_grid[g], 'A', dgp.sigma, m).transpose();
      } else {
        truth.row(g) = mc_true_theta(t_grid[g], 'B', dgp.sigma, m, options.oracle_draws,
                                     mix_seed(dgp.seed, 0xB00 + g))
                           .transpose();
      }
    }
  }

  const int arm_count = static_cast<int>(arms.size());
  report.rows.assign(static_cast<std::size_t>(B_mc) * arm_count, McRow{});
  const int g_med = (nt - 1) / 2;
  const int j_med = m / 2;

  parallel_for(B_mc, options.threads, [&](int r) {
    DgpSpec local = dgp;
    local.seed = mix_seed(dgp.seed, 7000 + static_cast<std::uint64_t>(r));
    const ObservationSet data = generate_dataset(local);
    for (int a = 0; a < arm_count; ++a) {
      McRow row;
      row.replication = r;
      row.estimator = arms[a].label();
      try {
        EstimatorSpec spec = arms[a];
        spec.fold_seed = mix_seed(local.seed, 100 + static_cast<std::uint64_t>(a));
        const ArmRun run = run_arm(data, spec, t_grid, want_band);

        if (want_mise) {
          double acc = 0.0;
          for (int g = 0; g < nt; ++g) {
            const double d = hilbert_norm(
                (run.estimate.theta.row(g) - truth.row(g)).transpose(), data.grid_kind);
            acc += d * d;
          }
          row.values.emplace_back("mise", acc / nt);
        }
        if (want_loo) {
          const Eigen::MatrixXd preds = loo_predictions(data, spec, run);
          double acc = 0.0;
          for (int i = 0; i < data.n(); ++i) {
            const Eigen::RowVectorXd proj = project_row(preds.row(i), data.grid_kind);
            const double d =
                hilbert_norm((data.outcomes.row(i) - proj).transpose(), data.grid_kind);
            acc += d * d;
          }
          row.values.emplace_back("loo_mse", acc / data.n());
        }
        if (want_band) {
          if (std::isfinite(run.estimate.bandwidth)) {
            const AsymptoticBand band =
                asymptotic_band(data, run.estimate, *run.gps, *run.outcome, run.kernel,
                                options.alpha, spec.corrector_at_observed_t, false);
            if (want_coverage) {
              const double target = truth(g_med, j_med);
              const bool covered =
                  target >= band.lower(g_med, j_med) && target <= band.upper(g_med, j_med);
              row.values.emplace_back("coverage", covered ? 1.0 : 0.0);
            }
            if (want_width) {
              double acc = 0.0;
              for (int g = 0; g < nt; ++g) {
                acc += hilbert_norm((band.upper.row(g) - band.lower.row(g)).transpose(),
                                    data.grid_kind);
              }
              row.values.emplace_back("band_width", acc / nt);
            }
          } else {
            // No kernel bandwidth (outcome-regression arm): band metrics are
            // undefined and excluded from summaries.
            if (want_coverage)
              row.values.emplace_back("coverage", std::numeric_limits<double>::quiet_NaN());
            if (want_width)
              row.values.emplace_back("band_width", std::numeric_limits<double>::quiet_NaN());
          }
        }
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
      report.rows[static_cast<std::size_t>(r) * arm_count + a] = std::move(row);
    }
  });

  for (const auto& row : report.rows) {
    if (row.failed) ++report.failures;
  }

  // Summaries with compensated accumulation, fixed row order.
  for (int a = 0; a < arm_count; ++a) {
    for (const auto& metric : options.metrics) {
      double sum = 0.0, comp = 0.0;
      int count = 0;
      for (int r = 0; r < B_mc; ++r) {
        const McRow& row = report.rows[static_cast<std::size_t>(r) * arm_count + a];
        if (row.failed) continue;
        for (const auto& [name, value] : row.values) {
          if (name == metric && std::isfinite(value)) {
            const double y = value - comp;
            const double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            ++count;
            break;
          }
        }
      }
      McSummary s;
      s.estimator = arms[a].label();
      s.metric = metric;
      s.count = count;
      s.mean = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
      if (count > 1) {
        double ss = 0.0, c2 = 0.0;
        for (int r = 0; r < B_mc; ++r) {
          const McRow& row = report.rows[static_cast<std::size_t>(r) * arm_count + a];
          if (row.failed) continue;
          for (const auto& [name, value] : row.values) {
            if (name == metric && std::isfinite(value)) {
              const double dev = (value - s.mean) * (value - s.mean);
              const double y = dev - c2;
              const double t = ss + y;
              c2 = (t - ss) - y;
              ss = t;
              break;
            }
          }
        }
        s.sd = std::sqrt(ss / (count - 1));
      } else {
        s.sd = std::numeric_limits<double>::quiet_NaN();
      }
      report.summaries.push_back(std::move(s));
    }
  }
  return report;
}

}  // namespace objdose
