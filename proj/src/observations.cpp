#include "objdose/observations.hpp"

#include <algorithm>
#include <stdexcept>

namespace objdose {

void ObservationSet::validate() const {
  const int rows = n();
  if (rows < 1) throw std::invalid_argument("ObservationSet: empty");
  if (covariates.rows() != rows || outcomes.rows() != rows)
    throw std::invalid_argument("ObservationSet: misaligned columns");
  if (outcomes.cols() < 2) throw std::invalid_argument("ObservationSet: grid length must be >= 2");
  if (!groups.empty() && static_cast<int>(groups.size()) != rows)
    throw std::invalid_argument("ObservationSet: group label count mismatch");
  if (!units.empty() && static_cast<int>(units.size()) != rows)
    throw std::invalid_argument("ObservationSet: unit id count mismatch");
  if (!discrete_columns.empty() && static_cast<int>(discrete_columns.size()) != p())
    throw std::invalid_argument("ObservationSet: discrete flag count mismatch");
  if (!covariates.allFinite() || !treatment.allFinite() || !outcomes.allFinite())
    throw std::invalid_argument("ObservationSet: non-finite values");
}

ObservationSet ObservationSet::subset(std::span<const int> indices) const {
  ObservationSet out;
  const int k = static_cast<int>(indices.size());
  out.covariates.resize(k, covariates.cols());
  out.treatment.resize(k);
  out.outcomes.resize(k, outcomes.cols());
  out.grid_kind = grid_kind;
  out.discrete_columns = discrete_columns;
  if (!groups.empty()) out.groups.resize(k);
  if (!units.empty()) out.units.resize(k);
  for (int r = 0; r < k; ++r) {
    const int i = indices[r];
    if (i < 0 || i >= n()) throw std::out_of_range("ObservationSet::subset: index out of range");
    out.covariates.row(r) = covariates.row(i);
    out.treatment[r] = treatment[i];
    out.outcomes.row(r) = outcomes.row(i);
    if (!groups.empty()) out.groups[r] = groups[i];
    if (!units.empty()) out.units[r] = units[i];
  }
  return out;
}

std::vector<std::string> ObservationSet::group_levels() const {
  std::vector<std::string> levels;
  for (const auto& g : groups) {
    if (std::find(levels.begin(), levels.end(), g) == levels.end()) levels.push_back(g);
  }
  return levels;
}

std::vector<int> ObservationSet::indices_of_group(const std::string& label) const {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(groups.size()); ++i) {
    if (groups[i] == label) idx.push_back(i);
  }
  return idx;
}

}  // namespace objdose
