#pragma once

#include <string_view>
#include <vector>

namespace modalreg {

// Predictor kernel K. The response kernel is always the standard normal
// density; the closed-form M-step depends on it.
//
// Epanechnikov is the default: it has the compact support [-1, 1] the
// asymptotic theory assumes. Gaussian is available for smoothness
// experiments, but the compact-support condition no longer holds.
enum class KernelFamily { Epanechnikov, Gaussian };

struct KernelSpec {
  KernelFamily family = KernelFamily::Epanechnikov;

  // Half-width of the support; +inf for Gaussian.
  double support() const noexcept;
  bool compact() const noexcept { return family == KernelFamily::Epanechnikov; }
};

KernelFamily parse_kernel_family(std::string_view name);
std::string_view kernel_family_name(KernelFamily family) noexcept;

// K(t) >= 0. The scaled kernel K_h(t) = K(t/h)/h is formed by callers.
double kernel_eval(const KernelSpec& spec, double t) noexcept;

inline double scaled_kernel(const KernelSpec& spec, double t, double h) noexcept {
  return kernel_eval(spec, t / h) / h;
}

struct KernelMoments {
  std::vector<double> mu;  // mu[j] = int t^j K(t) dt, j = 0..2p+2
  std::vector<double> nu;  // nu[j] = int t^j K(t)^2 dt
  double tilde_nu = 0.0;   // int t^2 phi(t)^2 dt
};

// Closed-form moments through order 2p+2. Odd entries are exact zeros.
KernelMoments kernel_moments(const KernelSpec& spec, int p);

// Standard normal helpers used throughout.
inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
inline constexpr double kSqrtPi = 1.77245385090551602729816748334;

double normal_pdf(double t) noexcept;
double normal_cdf(double t) noexcept;
double log_normal_pdf(double t) noexcept;

// phi_h(t) = phi(t/h)/h.
inline double scaled_normal_pdf(double t, double h) noexcept {
  return normal_pdf(t / h) / h;
}

// int t^2 phi(t)^2 dt = 1/(4 sqrt(pi)).
inline constexpr double kTildeNu = 0.141047395886939071;

}  // namespace modalreg
