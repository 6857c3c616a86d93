#include "objdose/objects.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace objdose {

namespace {
constexpr double kSymTol = 1e-10;
constexpr double kUnitTol = 1e-10;
// Slack for monotonicity/PSD checks so values produced by prior float
// arithmetic are not rejected.
constexpr double kMonotoneSlack = 1e-12;
}  // namespace

std::string to_string(ObjectTag tag) {
  switch (tag) {
    case ObjectTag::quantile: return "quantile";
    case ObjectTag::spd: return "spd";
    case ObjectTag::sphere: return "sphere";
  }
  return "unknown";
}

ObjectTag tag_of(const MetricObject& obj) {
  if (std::holds_alternative<QuantileFunction>(obj)) return ObjectTag::quantile;
  if (std::holds_alternative<SPDMatrix>(obj)) return ObjectTag::spd;
  return ObjectTag::sphere;
}

GridKind grid_kind_of(ObjectTag tag) {
  switch (tag) {
    case ObjectTag::quantile: return GridKind::probability_grid;
    case ObjectTag::spd: return GridKind::matrix_coords;
    case ObjectTag::sphere: return GridKind::ambient_coords;
  }
  return GridKind::probability_grid;
}

void validate(const QuantileFunction& q) {
  if (q.values.size() < 2)
    throw std::invalid_argument("QuantileFunction: grid length must be >= 2");
  if (!q.values.allFinite())
    throw std::invalid_argument("QuantileFunction: non-finite entries");
  const double scale = std::max(1.0, q.values.cwiseAbs().maxCoeff());
  for (int j = 1; j < q.values.size(); ++j) {
    if (q.values[j] < q.values[j - 1] - kMonotoneSlack * scale)
      throw std::invalid_argument("QuantileFunction: values must be nondecreasing");
  }
}

void validate(const SPDMatrix& s) {
  const Eigen::MatrixXd& a = s.entries;
  if (a.rows() < 1 || a.rows() != a.cols())
    throw std::invalid_argument("SPDMatrix: entries must be a square matrix");
  if (!a.allFinite()) throw std::invalid_argument("SPDMatrix: non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale)
    throw std::invalid_argument("SPDMatrix: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (a + a.transpose()),
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("SPDMatrix: eigenvalue decomposition failed");
  if (solver.eigenvalues().minCoeff() < -kSymTol * scale)
    throw std::invalid_argument("SPDMatrix: matrix has a negative eigenvalue");
}

void validate(const SpherePoint& s) {
  if (s.coords.size() < 2) throw std::invalid_argument("SpherePoint: dimension must be >= 2");
  if (!s.coords.allFinite()) throw std::invalid_argument("SpherePoint: non-finite entries");
  if (std::fabs(s.coords.norm() - 1.0) > kUnitTol)
    throw std::invalid_argument("SpherePoint: coordinates must have unit norm");
}

void validate(const MetricObject& obj) {
  std::visit([](const auto& o) { validate(o); }, obj);
}

}  // namespace objdose
