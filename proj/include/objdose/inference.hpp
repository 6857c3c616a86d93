#ifndef OBJDOSE_INFERENCE_HPP
#define OBJDOSE_INFERENCE_HPP

#include <Eigen/Core>
#include <cstdint>

#include "objdose/estimators.hpp"

namespace objdose {

/// Pointwise (in t and in the Hilbert grid index) confidence envelopes around
/// a dose-response estimate. sigma_hat stores the per-coordinate variance
/// estimate normalized so that se = sqrt(sigma_hat / (n h)).
struct AsymptoticBand {
  Eigen::VectorXd t_grid;
  Eigen::MatrixXd center;     // |t| x M
  Eigen::MatrixXd lower;      // |t| x M
  Eigen::MatrixXd upper;      // |t| x M
  Eigen::MatrixXd sigma_hat;  // |t| x M
  Eigen::MatrixXd bias_proxy; // |t| x M, empty unless requested
  double alpha = 0.05;
  double h = 0.0;
  GridKind grid_kind = GridKind::probability_grid;
};

/**
 * CLT-based pointwise band around `estimate`. Standard errors come from the
 * sample variance of the doubly robust influence contributions
 *   psi_i(t) = gamma(t, X_i) + K_h(T_i - t)/f(t|X_i) [V_i - gamma(., X_i)]
 * evaluated with the supplied nuisances, which captures both the kernel
 * variance component and the covariate-averaging component. No bias
 * correction is applied: the default bandwidth undersmooths, so bands target
 * the dose-response function directly. With bias_diagnostic, a plug-in
 * finite-difference estimate of the h^2-order smoothing bias is attached.
 */
AsymptoticBand asymptotic_band(const ObservationSet& data, const DoseResponseEstimate& estimate,
                               const GpsModel& gps, const OutcomeModel& outcome,
                               const Kernel& kernel, double alpha,
                               bool corrector_at_observed_t = false,
                               bool bias_diagnostic = false);

/// Smallest B with (1/2 - Delta)^B + (1/2 + Delta)^B <= alpha, plus the
/// randomization weight tau between B and B-1.
struct HulcB {
  int B = 0;
  double tau = 0.0;
};

HulcB hulc_B(double alpha, double delta_bias, int cap = 30);

/// Finite-sample confidence interval for the causal effect map between two
/// treatment levels: the coordinate-wise min/max envelope of the effect
/// estimates over randomly chosen disjoint subsamples.
struct HulcInterval {
  double alpha = 0.05;
  double delta_bias = 0.0;
  int B_star = 0;
  double t = 0.0;
  double t_prime = 0.0;
  Eigen::VectorXd lower;             // per coordinate
  Eigen::VectorXd upper;             // per coordinate
  Eigen::MatrixXd subsample_deltas;  // B_star x M
  std::uint64_t seed = 0;
  GridKind grid_kind = GridKind::probability_grid;
};

HulcInterval hulc_interval(const ObservationSet& data, const EstimatorSpec& spec, double t,
                           double t_prime, double alpha, double delta_bias, std::uint64_t seed,
                           int cap = 30);

}  // namespace objdose

#endif
