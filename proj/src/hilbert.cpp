#include "objdose/hilbert.hpp"

#include <cmath>
#include <stdexcept>

namespace objdose {

std::string to_string(GridKind kind) {
  switch (kind) {
    case GridKind::probability_grid: return "probability_grid";
    case GridKind::matrix_coords: return "matrix_coords";
    case GridKind::ambient_coords: return "ambient_coords";
    case GridKind::empirical_feature: return "empirical_feature";
  }
  return "unknown";
}

double hilbert_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, GridKind kind) {
  if (a.size() != b.size()) throw std::invalid_argument("hilbert_dot: size mismatch");
  if (a.size() < 2) throw std::invalid_argument("hilbert_dot: grid length must be >= 2");
  return grid_weight(kind, static_cast<int>(a.size())) * a.dot(b);
}

double hilbert_norm(const Eigen::VectorXd& a, GridKind kind) {
  return std::sqrt(hilbert_dot(a, a, kind));
}

double dot(const HilbertVector& a, const HilbertVector& b) {
  if (a.kind != b.kind) throw std::invalid_argument("dot: grid kind mismatch");
  return hilbert_dot(a.values, b.values, a.kind);
}

double norm(const HilbertVector& a) { return hilbert_norm(a.values, a.kind); }

double hilbert_distance(const HilbertVector& a, const HilbertVector& b) {
  if (a.kind != b.kind) throw std::invalid_argument("hilbert_distance: grid kind mismatch");
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("hilbert_distance: size mismatch");
  return hilbert_norm(a.values - b.values, a.kind);
}

Eigen::VectorXd probability_grid(int m) {
  if (m < 2) throw std::invalid_argument("probability_grid: m must be >= 2");
  Eigen::VectorXd p(m);
  for (int j = 0; j < m; ++j) p[j] = (j + 0.5) / static_cast<double>(m);
  return p;
}

}  // namespace objdose
