#include "modalreg/mixture.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>

#include "modalreg/error.hpp"
#include "modalreg/kernels.hpp"

namespace modalreg {

void ErrorMixture::validate() const {
  require(weights[0] >= 0.0 && weights[1] >= 0.0, "mixture weights must be nonnegative");
  require(std::abs(weights[0] + weights[1] - 1.0) < 1e-12, "mixture weights must sum to 1");
  require(sds[0] > 0.0 && sds[1] > 0.0, "mixture sds must be positive");
  require(std::isfinite(means[0]) && std::isfinite(means[1]), "mixture means must be finite");
}

double ErrorMixture::pdf(double t) const noexcept {
  double s = 0.0;
  for (int k = 0; k < 2; ++k) s += weights[k] * normal_pdf((t - means[k]) / sds[k]) / sds[k];
  return s;
}

double ErrorMixture::cdf(double t) const noexcept {
  double s = 0.0;
  for (int k = 0; k < 2; ++k) s += weights[k] * normal_cdf((t - means[k]) / sds[k]);
  return s;
}

double ErrorMixture::pdf_derivative(double t, int order) const {
  double s = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double z = (t - means[k]) / sds[k];
    const double p = normal_pdf(z);
    double d = 0.0;
    switch (order) {
      case 0: d = p; break;
      case 1: d = -z * p; break;
      case 2: d = (z * z - 1.0) * p; break;
      case 3: d = (3.0 * z - z * z * z) * p; break;
      default: fail(ErrorCode::InvalidArgument, "derivative order must be in 0..3");
    }
    s += weights[k] * d / std::pow(sds[k], order + 1);
  }
  return s;
}

double ErrorMixture::mean() const noexcept { return weights[0] * means[0] + weights[1] * means[1]; }

double ErrorMixture::sd() const noexcept {
  const double mu = mean();
  double second = 0.0;
  for (int k = 0; k < 2; ++k) second += weights[k] * (sds[k] * sds[k] + means[k] * means[k]);
  return std::sqrt(second - mu * mu);
}

double ErrorMixture::mode() const {
  const double lo = std::min(means[0] - 4.0 * sds[0], means[1] - 4.0 * sds[1]);
  const double hi = std::max(means[0] + 4.0 * sds[0], means[1] + 4.0 * sds[1]);
  constexpr int kGrid = 4000;
  const double step = (hi - lo) / kGrid;
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i <= kGrid; ++i) {
    const double v = pdf(lo + i * step);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + (best - 1) * step;
  const double b = lo + (best + 1) * step;
  const auto r = boost::math::tools::brent_find_minima([this](double t) { return -pdf(t); }, a, b,
                                                       std::numeric_limits<double>::digits / 2);
  // Brent on the density is only sqrt(eps)-accurate at a flat peak; polish
  // on the root of the first derivative.
  const double lo_r = std::max(a, r.first - step), hi_r = std::min(b, r.first + step);
  const auto slope = [this](double t) { return pdf_derivative(t, 1); };
  if (!(slope(lo_r) > 0.0 && slope(hi_r) < 0.0)) return r.first;
  boost::uintmax_t iters = 200;
  const auto root = boost::math::tools::toms748_solve(slope, lo_r, hi_r, boost::math::tools::eps_tolerance<double>(), iters);
  return 0.5 * (root.first + root.second);
}

double ErrorMixture::median() const {
  const double lo = std::min(means[0] - 10.0 * sds[0], means[1] - 10.0 * sds[1]);
  const double hi = std::max(means[0] + 10.0 * sds[0], means[1] + 10.0 * sds[1]);
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve([this](double t) { return cdf(t) - 0.5; }, lo, hi,
                                                   boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

double ErrorMixture::sample(Philox4x32& rng) const noexcept {
  const int k = rng.uniform() < weights[0] ? 0 : 1;
  return means[k] + sds[k] * standard_normal(rng);
}

ModalErrorDerivatives modal_error_derivatives(const ErrorMixture& mix, double sigma) {
  require(sigma > 0.0, "scale must be positive");
  const double m = mix.mode();
  return {mix.pdf(m) / sigma, mix.pdf_derivative(m, 2) / std::pow(sigma, 3),
          mix.pdf_derivative(m, 3) / std::pow(sigma, 4)};
}

}  // namespace modalreg
