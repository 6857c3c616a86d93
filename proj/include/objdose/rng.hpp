#ifndef OBJDOSE_RNG_HPP
#define OBJDOSE_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace objdose {

/// Standard normal quantile function (Wichura's AS241 PPND16 algorithm,
/// accurate to ~1e-16 relative error). p must lie in (0,1).
double normal_quantile(double p);

double normal_cdf(double x);
double normal_pdf(double x);

/// splitmix64 finalizer; used to derive substream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/**
 * Seeded random generator with deterministic substream derivation.
 *
 * All distributions are built from raw mt19937_64 output so sequences are
 * identical across platforms and standard-library versions. Substreams are
 * derived from the base seed (not the current state), so workers seeded by
 * substream(i) produce identical results regardless of scheduling.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed, 0)) {}

  Rng substream(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream + 1)); }

  std::uint64_t raw() { return engine_(); }

  /// Uniform on [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0,1); safe for log/quantile transforms.
  double uniform_oo() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via inverse-CDF sampling.
  double normal() { return normal_quantile(uniform_oo()); }

  /// Student-t with 2 degrees of freedom: Z / sqrt(chi2_2 / 2).
  double student_t2() {
    double z = normal();
    double chisq2 = -2.0 * std::log(uniform_oo());
    return z / std::sqrt(chisq2 / 2.0);
  }

  /// Uniform integer on [lo, hi] inclusive (rejection-free modulo bias is
  /// negligible for the ranges used here, but we reject anyway).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<int> permutation(int n);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace objdose

#endif
