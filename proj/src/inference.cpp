#include "objdose/inference.hpp"

#include <cmath>
#include <stdexcept>

#include "objdose/rng.hpp"

namespace objdose {

AsymptoticBand asymptotic_band(const ObservationSet& data, const DoseResponseEstimate& estimate,
                               const GpsModel& gps, const OutcomeModel& outcome,
                               const Kernel& kernel, double alpha, bool corrector_at_observed_t,
                               bool bias_diagnostic) {
  data.validate();
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("asymptotic_band: alpha must be in (0,1)");
  if (!std::isfinite(estimate.bandwidth) || !(estimate.bandwidth > 0.0))
    throw std::invalid_argument("asymptotic_band: estimate carries no bandwidth metadata");
  if (outcome.output_dim() != data.m())
    throw std::invalid_argument("asymptotic_band: outcome model grid does not match data");

  const int n = data.n();
  const int m = data.m();
  const int nt = estimate.grid_size();
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double h = estimate.bandwidth;

  AsymptoticBand band;
  band.t_grid = estimate.t_grid;
  band.center = estimate.theta;
  band.alpha = alpha;
  band.h = h;
  band.grid_kind = estimate.grid_kind;
  band.lower.resize(nt, m);
  band.upper.resize(nt, m);
  band.sigma_hat.resize(nt, m);
  if (bias_diagnostic) band.bias_proxy.resize(nt, m);

  Eigen::MatrixXd gamma_obs;
  if (corrector_at_observed_t) {
    gamma_obs.resize(n, m);
    for (int i = 0; i < n; ++i) {
      gamma_obs.row(i) =
          outcome.evaluate(data.treatment[i], data.covariates.row(i)).transpose();
    }
  }

  Eigen::MatrixXd psi(n, m);
  for (int g = 0; g < nt; ++g) {
    const double t = estimate.t_grid[g];
    for (int i = 0; i < n; ++i) {
      const Eigen::RowVectorXd xi = data.covariates.row(i);
      const Eigen::RowVectorXd gamma_t = outcome.evaluate(t, xi).transpose();
      const double kw = kernel.kh(data.treatment[i] - t) / gps.evaluate(t, xi);
      const Eigen::RowVectorXd anchor = corrector_at_observed_t ? gamma_obs.row(i) : gamma_t;
      psi.row(i) = gamma_t + kw * (data.outcomes.row(i) - anchor);
    }
    const Eigen::RowVectorXd mean = psi.colwise().mean();
    Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(m);
    if (n > 1) {
      var = (psi.rowwise() - mean).array().square().colwise().sum() / (n - 1);
    }
    const Eigen::RowVectorXd se = (var / n).array().sqrt();
    band.sigma_hat.row(g) = var * h;
    band.lower.row(g) = estimate.theta.row(g) - z * se;
    band.upper.row(g) = estimate.theta.row(g) + z * se;

    if (bias_diagnostic) {
      // Plug-in smoothing-bias proxy: h^2 (int u^2 k) [ mean_i gamma''(t,X_i)
      // + mean_i gamma'(t,X_i) f'(t|X_i)/f(t|X_i) ], derivatives by central
      // differences.
      const double step = std::max(h / 2.0, 1e-4 * (1.0 + std::fabs(t)));
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(m);
      for (int i = 0; i < n; ++i) {
        const Eigen::RowVectorXd xi = data.covariates.row(i);
        const Eigen::RowVectorXd g0 = outcome.evaluate(t, xi).transpose();
        const Eigen::RowVectorXd gp = outcome.evaluate(t + step, xi).transpose();
        const Eigen::RowVectorXd gm = outcome.evaluate(t - step, xi).transpose();
        const Eigen::RowVectorXd d2 = (gp - 2.0 * g0 + gm) / (step * step);
        const Eigen::RowVectorXd d1 = (gp - gm) / (2.0 * step);
        const double f0 = gps.evaluate(t, xi);
        const double fd = (gps.evaluate(t + step, xi) - gps.evaluate(t - step, xi)) / (2.0 * step);
        acc += d2 + d1 * (fd / f0);
      }
      band.bias_proxy.row(g) = (h * h * kernel.second_moment() / n) * acc;
    }
  }
  return band;
}

namespace {
double hulc_p(int b, double delta) {
  return std::pow(0.5 - delta, b) + std::pow(0.5 + delta, b);
}
}  // namespace

HulcB hulc_B(double alpha, double delta_bias, int cap) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("hulc_B: alpha must be in (0,1)");
  if (!(delta_bias >= 0.0 && delta_bias < 0.5))
    throw std::invalid_argument("hulc_B: delta_bias must be in [0, 1/2)");
  for (int b = 1; b <= cap; ++b) {
    if (hulc_p(b, delta_bias) <= alpha) {
      const double prev = hulc_p(b - 1, delta_bias);
      HulcB out;
      out.B = b;
      out.tau = (alpha - hulc_p(b, delta_bias)) / (prev - hulc_p(b, delta_bias));
      return out;
    }
  }
  throw std::invalid_argument("hulc_B: required number of splits exceeds cap");
}

HulcInterval hulc_interval(const ObservationSet& data, const EstimatorSpec& spec, double t,
                           double t_prime, double alpha, double delta_bias, std::uint64_t seed,
                           int cap) {
  data.validate();
  const HulcB b = hulc_B(alpha, delta_bias, cap);

  Rng rng(mix_seed(seed, 0x41c0));
  const double u = rng.uniform();
  const int b_star = (u <= b.tau) ? b.B : b.B - 1;
  if (b_star < 1) throw std::invalid_argument("hulc_interval: alpha too large for a single split");

  const int n = data.n();
  // Minimum rows needed to fit the configured nuisances on a subsample.
  int min_rows = 2;
  if (spec.kind != EstimatorKind::ipw) {
    if (spec.nuisance.outcome.kind == OutcomeKind::global_basis)
      min_rows = std::max(min_rows, 2 * data.p() + 5 + (spec.nuisance.outcome.model_a_basis ? 1 : 0));
    if (spec.nuisance.outcome.kind == OutcomeKind::local_linear)
      min_rows = std::max(min_rows, data.p() + 3);
  }
  if (spec.kind != EstimatorKind::outcome_regression &&
      spec.nuisance.gps.kind == GpsKind::linear_gaussian)
    min_rows = std::max(min_rows, data.p() + 2);
  if (spec.kind == EstimatorKind::cf) min_rows *= spec.folds;
  if (n < b_star * min_rows)
    throw std::invalid_argument("hulc_interval: sample too small for " + std::to_string(b_star) +
                                " subsamples of the configured estimator");

  const std::vector<int> perm = rng.permutation(n);
  Eigen::VectorXd grid(2);
  grid << t_prime, t;

  HulcInterval out;
  out.alpha = alpha;
  out.delta_bias = delta_bias;
  out.B_star = b_star;
  out.t = t;
  out.t_prime = t_prime;
  out.seed = seed;
  out.grid_kind = data.grid_kind;
  out.subsample_deltas.resize(b_star, data.m());

  for (int s = 0; s < b_star; ++s) {
    std::vector<int> idx;
    for (int r = s; r < n; r += b_star) idx.push_back(perm[r]);
    const ObservationSet sub = data.subset(idx);
    EstimatorSpec sub_spec = spec;
    sub_spec.fold_seed = mix_seed(seed, 0x5b + static_cast<std::uint64_t>(s));
    const DoseResponseEstimate est = run_estimator(sub, sub_spec, grid);
    out.subsample_deltas.row(s) = est.theta.row(1) - est.theta.row(0);
  }
  out.lower = out.subsample_deltas.colwise().minCoeff();
  out.upper = out.subsample_deltas.colwise().maxCoeff();
  return out;
}

}  // namespace objdose
