#ifndef OBJDOSE_OBJECTS_HPP
#define OBJDOSE_OBJECTS_HPP

#include <Eigen/Core>
#include <string>
#include <variant>

#include "objdose/hilbert.hpp"

namespace objdose {

/// Distribution on the real line represented by its quantile function
/// sampled on the midpoint probability grid. Carries the Wasserstein-2 metric.
struct QuantileFunction {
  Eigen::VectorXd values;  // Q(p_j), nondecreasing
};

/// Symmetric positive semi-definite matrix under the Frobenius metric.
struct SPDMatrix {
  Eigen::MatrixXd entries;
};

/// Point on the unit sphere in R^q. The direct embedding is an isometry for
/// the chordal metric; the geodesic metric is handled through the empirical
/// embedding (see embedding.hpp).
struct SpherePoint {
  Eigen::VectorXd coords;
};

using MetricObject = std::variant<QuantileFunction, SPDMatrix, SpherePoint>;

enum class ObjectTag { quantile, spd, sphere };

std::string to_string(ObjectTag tag);
ObjectTag tag_of(const MetricObject& obj);

/// Grid kind of the embedded image of each object type.
GridKind grid_kind_of(ObjectTag tag);

/// Throws std::invalid_argument when the object violates its type invariants
/// (non-monotone quantile vector, asymmetric or indefinite matrix, non-unit
/// sphere coordinates, non-finite entries).
void validate(const QuantileFunction& q);
void validate(const SPDMatrix& s);
void validate(const SpherePoint& s);
void validate(const MetricObject& obj);

}  // namespace objdose

#endif
