#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "modalreg/mixture.hpp"
#include "modalreg/modal_lpr.hpp"
#include "modalreg/varying_coeff.hpp"

namespace modalreg {

enum class ScenarioKind { Example1, VCModel1, VCModel2, Custom };

// Data-generating law. Scalar scenarios draw x ~ U(0,1) and
// y = location(x) + scale(x) eps. Varying-coefficient scenarios draw
// u ~ U(0,1), (x1, x2) standard normal with correlation `covariate_corr`,
// and y = g0(u) + g1(u) x1 + g2(u) x2 + scale(u) eps.
struct Scenario {
  ScenarioKind kind = ScenarioKind::Custom;
  ErrorMixture error{};
  std::function<double(double)> location;
  std::function<double(double)> location_second_derivative;
  std::function<double(double)> scale;
  std::function<std::array<double, 3>(double)> coefficients;
  std::function<std::array<double, 3>(double)> coefficient_second_derivatives;
  double covariate_corr = 0.70710678118654752440;

  bool varying_coefficient() const noexcept { return static_cast<bool>(coefficients); }
  std::string name() const;

  // Conditional mode, median and mean of y given x (scalar scenarios).
  double mode_curve(double x) const;
  double median_curve(double x) const;
  double mean_curve(double x) const;
  // Coefficients of Mode(y | x, u) = sum_j g_j(u) x_j: the intercept
  // absorbs scale(u) * mode(eps).
  std::array<double, 3> modal_coefficients(double u) const;
};

// y = 2 sin(pi x) + (1 + 2x) eps.
Scenario example1();
// model 1: g = (exp(2u-1), 8u(1-u), 2 sin^2(2 pi u));
// model 2: g = (sin(2 pi u), (2u-1)^2 + 0.5, exp(2u-1) - 1); scale 1 + 2u.
Scenario vc_model(int model);
// y = a + b x + sigma eps with a fixed error mixture.
Scenario homoscedastic_linear(double intercept, double slope, double sigma,
                              const ErrorMixture& error = {});
// g = (1 + u, 2 - u, u / 2) with constant error scale sigma.
Scenario homoscedastic_varying_coefficient(double sigma, const ErrorMixture& error = {});

struct ScalarSample {
  Dataset data;
  std::vector<double> errors;  // eps_i before scaling
};
struct VCSample {
  VCDataset data;  // columns 1, x1, x2
  std::vector<double> errors;
};

// Draws from stream `stream` of the Philox generator keyed by `seed`.
ScalarSample generate_scalar(const Scenario& scenario, std::size_t n, std::uint64_t seed,
                             std::uint64_t stream = 0);
VCSample generate_vc(const Scenario& scenario, std::size_t n, std::uint64_t seed,
                     std::uint64_t stream = 0);

ScalarSample generate_example1(std::size_t n, std::uint64_t seed, std::uint64_t stream = 0);
VCSample generate_vc_model(int model, std::size_t n, std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace modalreg
