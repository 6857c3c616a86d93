#include "objdose/frechet.hpp"

#include <stdexcept>

namespace objdose {

namespace {

FrechetMeanResult mean_from_embedded(const Eigen::VectorXd& avg, ObjectTag tag, GridKind kind,
                                     std::span<const MetricObject> sample) {
  FrechetMeanResult out;
  out.mean_embedded = project_to_image({avg, kind}, tag);
  out.mean_object = pull_back(out.mean_embedded, tag);
  double objective = 0.0;
  for (const MetricObject& obj : sample) {
    const double d = distance(obj, out.mean_object);
    objective += d * d;
  }
  out.objective = objective / static_cast<double>(sample.size());
  return out;
}

}  // namespace

FrechetMeanResult frechet_mean(std::span<const MetricObject> sample) {
  if (sample.empty()) throw std::invalid_argument("frechet_mean: empty sample");
  const ObjectTag tag = tag_of(sample[0]);
  HilbertVector first = embed(sample[0]);
  Eigen::VectorXd sum = first.values;
  for (std::size_t i = 1; i < sample.size(); ++i) {
    if (tag_of(sample[i]) != tag) throw std::invalid_argument("frechet_mean: mixed object types");
    const HilbertVector v = embed(sample[i]);
    if (v.size() != first.size()) throw std::invalid_argument("frechet_mean: grid mismatch");
    sum += v.values;
  }
  sum /= static_cast<double>(sample.size());
  return mean_from_embedded(sum, tag, first.kind, sample);
}

FrechetMeanResult weighted_frechet_mean(std::span<const MetricObject> sample,
                                        std::span<const double> weights) {
  if (sample.empty()) throw std::invalid_argument("weighted_frechet_mean: empty sample");
  if (sample.size() != weights.size())
    throw std::invalid_argument("weighted_frechet_mean: weight count mismatch");
  const ObjectTag tag = tag_of(sample[0]);
  HilbertVector first = embed(sample[0]);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(first.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("weighted_frechet_mean: negative weight");
    if (tag_of(sample[i]) != tag)
      throw std::invalid_argument("weighted_frechet_mean: mixed object types");
    const HilbertVector v = embed(sample[i]);
    if (v.size() != first.size())
      throw std::invalid_argument("weighted_frechet_mean: grid mismatch");
    sum += weights[i] * v.values;
    total += weights[i];
  }
  if (total <= 0.0) throw std::invalid_argument("weighted_frechet_mean: weights sum to zero");
  sum /= total;
  return mean_from_embedded(sum, tag, first.kind, sample);
}

EffectMap effect_map(const HilbertVector& theta_low, const HilbertVector& theta_high,
                     double t_low, double t_high) {
  if (theta_low.kind != theta_high.kind || theta_low.size() != theta_high.size())
    throw std::invalid_argument("effect_map: grid mismatch");
  EffectMap out;
  out.t_low = t_low;
  out.t_high = t_high;
  out.delta = {theta_high.values - theta_low.values, theta_low.kind};
  out.magnitude = norm(out.delta);
  return out;
}

}  // namespace objdose
