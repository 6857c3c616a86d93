#ifndef OBJDOSE_EMBEDDING_HPP
#define OBJDOSE_EMBEDDING_HPP

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

#include "objdose/hilbert.hpp"
#include "objdose/objects.hpp"

namespace objdose {

/**
 * Isometric embedding into the latent Hilbert space:
 *  - quantile functions map to themselves on the probability grid
 *    (Wasserstein-2 isometry under the 1/M quadrature inner product),
 *  - SPD matrices vectorize to all K^2 entries (Frobenius isometry),
 *  - sphere points map to their ambient coordinates (chordal-metric isometry;
 *    the geodesic metric requires the empirical embedding below).
 * Validates the object first.
 */
HilbertVector embed(const MetricObject& obj);

/// Metric realized by embed(): Wasserstein-2 (quantile), Frobenius (SPD),
/// chordal (sphere). Throws on type or grid mismatch.
double distance(const MetricObject& a, const MetricObject& b);

/// Great-circle distance; not realized by the direct ambient embedding.
double sphere_geodesic(const SpherePoint& a, const SpherePoint& b);

/// Pool-adjacent-violators isotonic fit with uniform weights: the nearest
/// nondecreasing vector in the (1/M)-weighted norm.
Eigen::VectorXd isotonic_fit(const Eigen::VectorXd& v);

/// Nearest symmetric PSD matrix in Frobenius norm (symmetrize, clip negative
/// eigenvalues at zero).
Eigen::MatrixXd nearest_psd(const Eigen::MatrixXd& a);

/// Metric projection onto the closed convex image of the object space in H.
/// Idempotent. Throws for the zero vector under the sphere tag (no unique
/// nearest point) and when the grid kind does not match the target tag.
HilbertVector project_to_image(const HilbertVector& v, ObjectTag target);

/// Inverse embedding after projection; pull_back(embed(y)) == y for valid y.
MetricObject pull_back(const HilbertVector& v, ObjectTag target);

/**
 * Finite-sample Hilbert embedding for objects carrying only a negative-type
 * metric. Built from the kernel
 *   gram[i,j] = (d^2(y_i, z0) + d^2(y_j, z0) - d^2(y_i, y_j)) / 2,
 * so feature rows satisfy ||phi_i - phi_j|| = d(y_i, y_j) when the squared
 * metric is of negative type. Eigenvalues below the floor are clipped; the
 * most negative one is kept as a negative-type diagnostic.
 */
struct EmpiricalEmbedding {
  Eigen::MatrixXd gram;    // n x n
  Eigen::MatrixXd factor;  // n x r feature rows
  int base_point_index = 0;
  double eig_floor = 0.0;               // resolved absolute clipping threshold
  double most_negative_eigenvalue = 0;  // before clipping
  bool negative_type_warning = false;   // eigenvalue below -1e-6 * trace

  int n() const { return static_cast<int>(gram.rows()); }
  int rank() const { return static_cast<int>(factor.cols()); }
  HilbertVector feature(int i) const;
};

/// metric(i, j) must be symmetric with zero diagonal; eig_floor_rel scales the
/// largest eigenvalue to obtain the clipping threshold.
EmpiricalEmbedding build_empirical_embedding(int n,
                                             const std::function<double(int, int)>& metric,
                                             int base_point_index = 0,
                                             double eig_floor_rel = 1e-10);

/// Convenience overload over a homogeneous sample using distance().
EmpiricalEmbedding build_empirical_embedding(std::span<const MetricObject> sample,
                                             int base_point_index = 0,
                                             double eig_floor_rel = 1e-10);

}  // namespace objdose

#endif
