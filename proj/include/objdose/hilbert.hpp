#ifndef OBJDOSE_HILBERT_HPP
#define OBJDOSE_HILBERT_HPP

#include <Eigen/Core>
#include <string>

namespace objdose {

/// Coordinate system of a vector in the latent Hilbert space. The grid kind
/// selects the inner product: probability_grid uses the (1/M)-weighted dot
/// product (midpoint quadrature of an L2[0,1] integral); all other kinds use
/// the plain Euclidean dot product.
enum class GridKind { probability_grid, matrix_coords, ambient_coords, empirical_feature };

std::string to_string(GridKind kind);

/// Discretized element of the latent Hilbert space.
struct HilbertVector {
  Eigen::VectorXd values;
  GridKind kind = GridKind::probability_grid;

  int size() const { return static_cast<int>(values.size()); }
};

/// Quadrature weight applied to coordinate-wise products.
inline double grid_weight(GridKind kind, int m) {
  return kind == GridKind::probability_grid ? 1.0 / static_cast<double>(m) : 1.0;
}

double hilbert_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, GridKind kind);
double hilbert_norm(const Eigen::VectorXd& a, GridKind kind);

double dot(const HilbertVector& a, const HilbertVector& b);
double norm(const HilbertVector& a);
double hilbert_distance(const HilbertVector& a, const HilbertVector& b);

/// Midpoint probability grid p_j = (j - 1/2)/m, j = 1..m.
Eigen::VectorXd probability_grid(int m);

}  // namespace objdose

#endif
