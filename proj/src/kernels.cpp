#include "objdose/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "objdose/rng.hpp"

namespace objdose {

std::string to_string(KernelFamily family) {
  return family == KernelFamily::gaussian ? "gaussian" : "epanechnikov";
}

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  throw std::invalid_argument("unknown kernel family: " + name);
}

Kernel::Kernel(KernelFamily f, double bandwidth) : family(f), h(bandwidth) {
  if (!(h > 0.0)) throw std::invalid_argument("Kernel: bandwidth must be positive");
}

double Kernel::k(double u) const {
  switch (family) {
    case KernelFamily::gaussian:
      return normal_pdf(u);
    case KernelFamily::epanechnikov:
      return std::fabs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  }
  return 0.0;
}

double Kernel::squared_integral() const {
  switch (family) {
    case KernelFamily::gaussian:
      return 1.0 / (2.0 * std::sqrt(M_PI));
    case KernelFamily::epanechnikov:
      return 0.6;
  }
  return 0.0;
}

double Kernel::second_moment() const {
  switch (family) {
    case KernelFamily::gaussian:
      return 1.0;
    case KernelFamily::epanechnikov:
      return 0.2;
  }
  return 0.0;
}

}  // namespace objdose
