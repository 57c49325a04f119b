#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "modalreg/error.hpp"
#include "modalreg/kernels.hpp"

using namespace modalreg;
using boost::math::quadrature::gauss_kronrod;

namespace {

double integrate(const KernelSpec& k, auto&& f) {
  const double s = k.compact() ? 1.0 : std::numeric_limits<double>::infinity();
  return gauss_kronrod<double, 61>::integrate(f, -s, s, 15, 1e-13);
}

const KernelSpec kEpa{KernelFamily::Epanechnikov};
const KernelSpec kGauss{KernelFamily::Gaussian};

}  // namespace

TEST_CASE("kernel values at reference points") {
  CHECK(kernel_eval(kEpa, 0.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(kernel_eval(kEpa, 2.0) == 0.0);
  CHECK(kernel_eval(kEpa, 1.0) == 0.0);
  CHECK(kernel_eval(kEpa, -0.5) == doctest::Approx(0.5625).epsilon(1e-15));
  CHECK(kernel_eval(kGauss, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-15));
  CHECK(scaled_kernel(kEpa, 0.1, 0.2) == doctest::Approx(0.75 * 0.75 / 0.2).epsilon(1e-14));
}

TEST_CASE("kernels are symmetric densities") {
  for (const auto& k : {kEpa, kGauss}) {
    CHECK(integrate(k, [&](double t) { return kernel_eval(k, t); }) == doctest::Approx(1.0).epsilon(1e-8));
    for (double t : {0.01, 0.3, 0.77, 0.99, 1.5, 3.0}) CHECK(kernel_eval(k, t) == kernel_eval(k, -t));
  }
  CHECK(std::isinf(kGauss.support()));
  CHECK(kEpa.support() == 1.0);
}

TEST_CASE("closed-form moments agree with quadrature") {
  for (const auto& k : {kEpa, kGauss}) {
    for (int p = 0; p <= 3; ++p) {
      const KernelMoments m = kernel_moments(k, p);
      REQUIRE(m.mu.size() == static_cast<std::size_t>(2 * p + 3));
      REQUIRE(m.nu.size() == m.mu.size());
      for (std::size_t j = 0; j < m.mu.size(); ++j) {
        const double mu = integrate(k, [&](double t) { return std::pow(t, j) * kernel_eval(k, t); });
        const double nu = integrate(k, [&](double t) { return std::pow(t, j) * std::pow(kernel_eval(k, t), 2); });
        if (j % 2 == 1) {
          CHECK(m.mu[j] == 0.0);
          CHECK(m.nu[j] == 0.0);
        } else {
          CHECK(std::abs(m.mu[j] - mu) < 1e-8);
          CHECK(std::abs(m.nu[j] - nu) < 1e-8);
        }
      }
    }
  }
}

TEST_CASE("named moment constants") {
  const KernelMoments e = kernel_moments(kEpa, 1);
  CHECK(e.mu[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(e.mu[2] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(e.nu[0] == doctest::Approx(0.6).epsilon(1e-15));
  const KernelMoments g = kernel_moments(kGauss, 1);
  CHECK(g.mu[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g.nu[0] == doctest::Approx(1.0 / (2.0 * std::sqrt(M_PI))).epsilon(1e-14));
  const double tilde = gauss_kronrod<double, 61>::integrate(
      [](double t) { return t * t * std::pow(normal_pdf(t), 2); }, -std::numeric_limits<double>::infinity(),
      std::numeric_limits<double>::infinity(), 15, 1e-14);
  CHECK(e.tilde_nu == doctest::Approx(tilde).epsilon(1e-10));
  CHECK(kTildeNu == doctest::Approx(1.0 / (4.0 * std::sqrt(M_PI))).epsilon(1e-15));
}

TEST_CASE("kernel family names round-trip") {
  CHECK(parse_kernel_family("epanechnikov") == KernelFamily::Epanechnikov);
  CHECK(parse_kernel_family(kernel_family_name(KernelFamily::Gaussian)) == KernelFamily::Gaussian);
  CHECK_THROWS_AS(parse_kernel_family("triweight"), Error);
  CHECK_THROWS_AS(kernel_moments(kEpa, -1), Error);
}

TEST_CASE("normal helpers") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-14));
  CHECK(std::exp(log_normal_pdf(1.3)) == doctest::Approx(normal_pdf(1.3)).epsilon(1e-14));
  CHECK(scaled_normal_pdf(0.0, 2.0) == doctest::Approx(kInvSqrt2Pi / 2.0).epsilon(1e-15));
}
