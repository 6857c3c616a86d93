#ifndef OBJDOSE_OBSERVATIONS_HPP
#define OBJDOSE_OBSERVATIONS_HPP

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "objdose/hilbert.hpp"

namespace objdose {

/// Aligned columns for n units: covariates X_i in R^p, scalar treatment T_i,
/// and embedded outcomes V_i in H (one row per unit). Group labels, unit ids
/// and per-column discrete flags are optional (empty when absent).
struct ObservationSet {
  Eigen::MatrixXd covariates;  // n x p
  Eigen::VectorXd treatment;   // n
  Eigen::MatrixXd outcomes;    // n x M
  GridKind grid_kind = GridKind::probability_grid;
  std::vector<std::string> groups;      // size n or empty
  std::vector<std::string> units;       // size n or empty
  std::vector<bool> discrete_columns;   // size p or empty

  int n() const { return static_cast<int>(treatment.size()); }
  int p() const { return static_cast<int>(covariates.cols()); }
  int m() const { return static_cast<int>(outcomes.cols()); }

  bool is_discrete(int column) const {
    return !discrete_columns.empty() && discrete_columns[static_cast<std::size_t>(column)];
  }

  void validate() const;

  ObservationSet subset(std::span<const int> indices) const;

  /// Distinct group labels in order of first appearance.
  std::vector<std::string> group_levels() const;
  std::vector<int> indices_of_group(const std::string& label) const;
};

}  // namespace objdose

#endif
