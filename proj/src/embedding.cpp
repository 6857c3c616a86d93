#include "objdose/embedding.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace objdose {

HilbertVector embed(const MetricObject& obj) {
  validate(obj);
  if (const auto* q = std::get_if<QuantileFunction>(&obj)) {
    return {q->values, GridKind::probability_grid};
  }
  if (const auto* s = std::get_if<SPDMatrix>(&obj)) {
    const Eigen::MatrixXd& a = s->entries;
    Eigen::VectorXd flat(a.size());
    // Column-major vectorization; any fixed layout realizes the Frobenius
    // isometry.
    Eigen::Map<const Eigen::VectorXd> view(a.data(), a.size());
    flat = view;
    return {flat, GridKind::matrix_coords};
  }
  const auto& sp = std::get<SpherePoint>(obj);
  return {sp.coords, GridKind::ambient_coords};
}

double distance(const MetricObject& a, const MetricObject& b) {
  if (tag_of(a) != tag_of(b)) throw std::invalid_argument("distance: object type mismatch");
  const HilbertVector va = embed(a);
  const HilbertVector vb = embed(b);
  if (va.size() != vb.size()) throw std::invalid_argument("distance: grid mismatch");
  return hilbert_distance(va, vb);
}

double sphere_geodesic(const SpherePoint& a, const SpherePoint& b) {
  validate(a);
  validate(b);
  if (a.coords.size() != b.coords.size())
    throw std::invalid_argument("sphere_geodesic: dimension mismatch");
  const double c = std::clamp(a.coords.dot(b.coords), -1.0, 1.0);
  return std::acos(c);
}

Eigen::VectorXd isotonic_fit(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  // Pool adjacent violators, single left-to-right pass over blocks.
  std::vector<double> mean(n), weight(n);
  std::vector<int> len(n);
  int blocks = 0;
  for (int i = 0; i < n; ++i) {
    mean[blocks] = v[i];
    weight[blocks] = 1.0;
    len[blocks] = 1;
    ++blocks;
    while (blocks > 1 && mean[blocks - 2] > mean[blocks - 1]) {
      const double w = weight[blocks - 2] + weight[blocks - 1];
      mean[blocks - 2] =
          (mean[blocks - 2] * weight[blocks - 2] + mean[blocks - 1] * weight[blocks - 1]) / w;
      weight[blocks - 2] = w;
      len[blocks - 2] += len[blocks - 1];
      --blocks;
    }
  }
  Eigen::VectorXd out(n);
  int pos = 0;
  for (int b = 0; b < blocks; ++b) {
    for (int k = 0; k < len[b]; ++k) out[pos++] = mean[b];
  }
  return out;
}

Eigen::MatrixXd nearest_psd(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("nearest_psd: eigenvalue decomposition failed");
  Eigen::VectorXd vals = solver.eigenvalues().cwiseMax(0.0);
  return solver.eigenvectors() * vals.asDiagonal() * solver.eigenvectors().transpose();
}

HilbertVector project_to_image(const HilbertVector& v, ObjectTag target) {
  if (!v.values.allFinite()) throw std::invalid_argument("project_to_image: non-finite input");
  if (v.kind != grid_kind_of(target))
    throw std::invalid_argument("project_to_image: grid kind does not match target tag");
  switch (target) {
    case ObjectTag::quantile:
      return {isotonic_fit(v.values), v.kind};
    case ObjectTag::spd: {
      const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v.size()))));
      if (k * k != v.size())
        throw std::invalid_argument("project_to_image: matrix coordinates are not square");
      Eigen::Map<const Eigen::MatrixXd> mat(v.values.data(), k, k);
      const Eigen::MatrixXd psd = nearest_psd(mat);
      Eigen::VectorXd flat(psd.size());
      flat = Eigen::Map<const Eigen::VectorXd>(psd.data(), psd.size());
      return {flat, v.kind};
    }
    case ObjectTag::sphere: {
      const double nrm = v.values.norm();
      if (nrm < 1e-14)
        throw std::invalid_argument("project_to_image: zero vector has no unique sphere point");
      return {v.values / nrm, v.kind};
    }
  }
  throw std::logic_error("project_to_image: unreachable");
}

MetricObject pull_back(const HilbertVector& v, ObjectTag target) {
  const HilbertVector proj = project_to_image(v, target);
  switch (target) {
    case ObjectTag::quantile:
      return QuantileFunction{proj.values};
    case ObjectTag::spd: {
      const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(proj.size()))));
      Eigen::MatrixXd mat = Eigen::Map<const Eigen::MatrixXd>(proj.values.data(), k, k);
      return SPDMatrix{mat};
    }
    case ObjectTag::sphere:
      return SpherePoint{proj.values};
  }
  throw std::logic_error("pull_back: unreachable");
}

HilbertVector EmpiricalEmbedding::feature(int i) const {
  if (i < 0 || i >= n()) throw std::out_of_range("EmpiricalEmbedding::feature: index");
  return {factor.row(i).transpose(), GridKind::empirical_feature};
}

EmpiricalEmbedding build_empirical_embedding(int n,
                                             const std::function<double(int, int)>& metric,
                                             int base_point_index, double eig_floor_rel) {
  if (n < 2) throw std::invalid_argument("build_empirical_embedding: need n >= 2");
  if (base_point_index < 0 || base_point_index >= n)
    throw std::invalid_argument("build_empirical_embedding: base point index out of range");

  Eigen::MatrixXd d2(n, n);
  for (int i = 0; i < n; ++i) {
    const double dii = metric(i, i);
    if (std::fabs(dii) > 1e-10)
      throw std::invalid_argument("build_empirical_embedding: metric has nonzero diagonal");
    d2(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double dij = metric(i, j);
      const double dji = metric(j, i);
      if (!(dij >= 0.0) || std::fabs(dij - dji) > 1e-10 * std::max(1.0, std::fabs(dij)))
        throw std::invalid_argument("build_empirical_embedding: metric is not symmetric");
      d2(i, j) = d2(j, i) = dij * dij;
    }
  }

  const int z0 = base_point_index;
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      gram(i, j) = 0.5 * (d2(i, z0) + d2(j, z0) - d2(i, j));
    }
  }
  gram = 0.5 * (gram + gram.transpose());  // exact symmetry for the solver

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("build_empirical_embedding: eigendecomposition failed");
  const Eigen::VectorXd evals = solver.eigenvalues();
  const double max_eval = evals.maxCoeff();
  const double floor = eig_floor_rel * std::max(max_eval, 0.0);

  EmpiricalEmbedding out;
  out.gram = gram;
  out.base_point_index = z0;
  out.eig_floor = floor;
  out.most_negative_eigenvalue = std::min(evals.minCoeff(), 0.0);
  out.negative_type_warning = evals.minCoeff() < -1e-6 * gram.trace();

  std::vector<int> kept;
  for (int i = 0; i < n; ++i) {
    if (evals[i] > floor) kept.push_back(i);
  }
  if (kept.empty())
    throw std::invalid_argument("build_empirical_embedding: degenerate sample, all eigenvalues clipped");

  out.factor.resize(n, static_cast<int>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    out.factor.col(static_cast<int>(c)) =
        solver.eigenvectors().col(kept[c]) * std::sqrt(evals[kept[c]]);
  }
  return out;
}

EmpiricalEmbedding build_empirical_embedding(std::span<const MetricObject> sample,
                                             int base_point_index, double eig_floor_rel) {
  const int n = static_cast<int>(sample.size());
  return build_empirical_embedding(
      n,
      [&sample](int i, int j) { return i == j ? 0.0 : distance(sample[i], sample[j]); },
      base_point_index, eig_floor_rel);
}

}  // namespace objdose
