#ifndef OBJDOSE_FRECHET_HPP
#define OBJDOSE_FRECHET_HPP

#include <span>

#include "objdose/embedding.hpp"

namespace objdose {

struct FrechetMeanResult {
  HilbertVector mean_embedded;
  MetricObject mean_object;
  double objective = 0.0;  // attained value of n^-1 sum d^2(Y_i, mean)
};

/// Barycenter computed through the embedding: project the coordinate-wise
/// average of the embedded sample onto the image and pull back. Requires a
/// nonempty sample of uniform type and grid.
FrechetMeanResult frechet_mean(std::span<const MetricObject> sample);

/// Weighted variant with nonnegative weights summing to a positive value.
FrechetMeanResult weighted_frechet_mean(std::span<const MetricObject> sample,
                                        std::span<const double> weights);

/// Difference of embedded dose-response values between two treatment levels,
/// reported both as the Hilbert-space vector and as its norm.
struct EffectMap {
  double t_low = 0.0;
  double t_high = 0.0;
  HilbertVector delta;      // theta_high - theta_low
  double magnitude = 0.0;   // H-norm of delta
};

EffectMap effect_map(const HilbertVector& theta_low, const HilbertVector& theta_high,
                     double t_low, double t_high);

}  // namespace objdose

#endif
