#include "modalreg/kernels.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "modalreg/error.hpp"

namespace modalreg {
namespace {

// E[Z^j] for Z ~ N(0, 1), j even: (j-1)!!.
double double_factorial_odd(int j) {
  double r = 1.0;
  for (int k = j - 1; k > 1; k -= 2) r *= k;
  return r;
}

}  // namespace

double KernelSpec::support() const noexcept {
  return compact() ? 1.0 : std::numeric_limits<double>::infinity();
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "epanechnikov") return KernelFamily::Epanechnikov;
  if (name == "gaussian") return KernelFamily::Gaussian;
  fail(ErrorCode::InvalidArgument,
       "unknown kernel '" + std::string(name) + "' (expected epanechnikov|gaussian)");
}

std::string_view kernel_family_name(KernelFamily family) noexcept {
  return family == KernelFamily::Epanechnikov ? "epanechnikov" : "gaussian";
}

double normal_pdf(double t) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

double log_normal_pdf(double t) noexcept {
  return -0.5 * t * t - 0.918938533204672741780329736406;
}

double normal_cdf(double t) noexcept { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

double kernel_eval(const KernelSpec& spec, double t) noexcept {
  switch (spec.family) {
    case KernelFamily::Epanechnikov: {
      const double a = std::abs(t);
      return a < 1.0 ? 0.75 * (1.0 - t * t) : 0.0;
    }
    case KernelFamily::Gaussian:
      return normal_pdf(t);
  }
  return 0.0;
}

KernelMoments kernel_moments(const KernelSpec& spec, int p) {
  require(p >= 0, "kernel_moments: order p must be nonnegative");
  const int top = 2 * p + 2;
  KernelMoments m;
  m.mu.assign(top + 1, 0.0);
  m.nu.assign(top + 1, 0.0);
  m.tilde_nu = kTildeNu;
  for (int j = 0; j <= top; j += 2) {
    const double jd = j;
    switch (spec.family) {
      case KernelFamily::Epanechnikov:
        // 0.75 (1 - t^2) and its square 0.5625 (1 - t^2)^2 on [-1, 1].
        m.mu[j] = 1.5 * (1.0 / (jd + 1.0) - 1.0 / (jd + 3.0));
        m.nu[j] = 1.125 * (1.0 / (jd + 1.0) - 2.0 / (jd + 3.0) + 1.0 / (jd + 5.0));
        break;
      case KernelFamily::Gaussian:
        // phi(t)^2 is the N(0, 1/2) density scaled by 1/(2 sqrt pi).
        m.mu[j] = double_factorial_odd(j);
        m.nu[j] = double_factorial_odd(j) * std::pow(0.5, jd / 2.0) / (2.0 * kSqrtPi);
        break;
    }
  }
  return m;
}

}  // namespace modalreg
