#ifndef OBJDOSE_KERNELS_HPP
#define OBJDOSE_KERNELS_HPP

#include <string>

namespace objdose {

enum class KernelFamily { gaussian, epanechnikov };

std::string to_string(KernelFamily family);
KernelFamily parse_kernel_family(const std::string& name);

/// Smoothing kernel: a symmetric probability density with finite second
/// moment. The Gaussian family is the default; Epanechnikov gives compact
/// support.
struct Kernel {
  KernelFamily family = KernelFamily::gaussian;
  double h = 1.0;  // bandwidth, > 0

  Kernel() = default;
  Kernel(KernelFamily f, double bandwidth);

  /// Base density k(u).
  double k(double u) const;
  /// Scaled kernel K_h(u) = k(u/h)/h.
  double kh(double u) const { return k(u / h) / h; }

  double squared_integral() const;  // int k(u)^2 du
  double second_moment() const;     // int u^2 k(u) du
};

}  // namespace objdose

#endif
