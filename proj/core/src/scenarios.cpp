#include "modalreg/scenarios.hpp"

#include <cmath>
#include <numbers>

#include "modalreg/error.hpp"

namespace modalreg {

std::string Scenario::name() const {
  switch (kind) {
    case ScenarioKind::Example1: return "example1";
    case ScenarioKind::VCModel1: return "vc-model1";
    case ScenarioKind::VCModel2: return "vc-model2";
    case ScenarioKind::Custom: return "custom";
  }
  return "custom";
}

double Scenario::mode_curve(double x) const { return location(x) + scale(x) * error.mode(); }
double Scenario::median_curve(double x) const { return location(x) + scale(x) * error.median(); }
double Scenario::mean_curve(double x) const { return location(x) + scale(x) * error.mean(); }

std::array<double, 3> Scenario::modal_coefficients(double u) const {
  auto g = coefficients(u);
  g[0] += scale(u) * error.mode();
  return g;
}

Scenario example1() {
  using std::numbers::pi;
  Scenario s;
  s.kind = ScenarioKind::Example1;
  s.location = [](double x) { return 2.0 * std::sin(pi * x); };
  s.location_second_derivative = [](double x) { return -2.0 * pi * pi * std::sin(pi * x); };
  s.scale = [](double x) { return 1.0 + 2.0 * x; };
  return s;
}

Scenario vc_model(int model) {
  using std::numbers::pi;
  Scenario s;
  s.scale = [](double u) { return 1.0 + 2.0 * u; };
  if (model == 1) {
    s.kind = ScenarioKind::VCModel1;
    s.coefficients = [](double u) {
      const double sn = std::sin(2.0 * pi * u);
      return std::array<double, 3>{std::exp(2.0 * u - 1.0), 8.0 * u * (1.0 - u), 2.0 * sn * sn};
    };
    s.coefficient_second_derivatives = [](double u) {
      // 2 sin^2(2 pi u) = 1 - cos(4 pi u)
      return std::array<double, 3>{4.0 * std::exp(2.0 * u - 1.0), -16.0,
                                   16.0 * pi * pi * std::cos(4.0 * pi * u)};
    };
  } else if (model == 2) {
    s.kind = ScenarioKind::VCModel2;
    s.coefficients = [](double u) {
      return std::array<double, 3>{std::sin(2.0 * pi * u), (2.0 * u - 1.0) * (2.0 * u - 1.0) + 0.5,
                                   std::exp(2.0 * u - 1.0) - 1.0};
    };
    s.coefficient_second_derivatives = [](double u) {
      return std::array<double, 3>{-4.0 * pi * pi * std::sin(2.0 * pi * u), 8.0,
                                   4.0 * std::exp(2.0 * u - 1.0)};
    };
  } else {
    fail(ErrorCode::InvalidArgument, "varying-coefficient model must be 1 or 2");
  }
  return s;
}

Scenario homoscedastic_linear(double intercept, double slope, double sigma, const ErrorMixture& error) {
  require(sigma > 0.0, "scale must be positive");
  error.validate();
  Scenario s;
  s.kind = ScenarioKind::Custom;
  s.error = error;
  s.location = [=](double x) { return intercept + slope * x; };
  s.location_second_derivative = [](double) { return 0.0; };
  s.scale = [=](double) { return sigma; };
  return s;
}

Scenario homoscedastic_varying_coefficient(double sigma, const ErrorMixture& error) {
  require(sigma > 0.0, "scale must be positive");
  error.validate();
  Scenario s;
  s.kind = ScenarioKind::Custom;
  s.error = error;
  s.coefficients = [](double u) { return std::array<double, 3>{1.0 + u, 2.0 - u, 0.5 * u}; };
  s.coefficient_second_derivatives = [](double) { return std::array<double, 3>{0.0, 0.0, 0.0}; };
  s.scale = [=](double) { return sigma; };
  return s;
}

ScalarSample generate_scalar(const Scenario& scenario, std::size_t n, std::uint64_t seed,
                             std::uint64_t stream) {
  require(n >= 2, "sample size must be at least 2");
  require(static_cast<bool>(scenario.location) && static_cast<bool>(scenario.scale),
          "scenario has no scalar regression law");
  Philox4x32 rng(seed, stream);
  std::vector<double> x(n), y(n), e(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform();
    e[i] = scenario.error.sample(rng);
    y[i] = scenario.location(x[i]) + scenario.scale(x[i]) * e[i];
  }
  return {Dataset(std::move(x), std::move(y)), std::move(e)};
}

VCSample generate_vc(const Scenario& scenario, std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  require(n >= 2, "sample size must be at least 2");
  require(scenario.varying_coefficient(), "scenario has no varying-coefficient law");
  const double rho = scenario.covariate_corr;
  require(std::abs(rho) < 1.0, "covariate correlation must lie in (-1, 1)");
  const double tail = std::sqrt(1.0 - rho * rho);
  Philox4x32 rng(seed, stream);
  std::vector<double> u(n), y(n), e(n);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    u[i] = rng.uniform();
    const double z1 = standard_normal(rng);
    const double z2 = standard_normal(rng);
    X(r, 0) = 1.0;
    X(r, 1) = z1;
    X(r, 2) = rho * z1 + tail * z2;
    e[i] = scenario.error.sample(rng);
    const auto g = scenario.coefficients(u[i]);
    y[i] = g[0] + g[1] * X(r, 1) + g[2] * X(r, 2) + scenario.scale(u[i]) * e[i];
  }
  return {VCDataset(std::move(u), std::move(X), std::move(y)), std::move(e)};
}

ScalarSample generate_example1(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  return generate_scalar(example1(), n, seed, stream);
}

VCSample generate_vc_model(int model, std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  return generate_vc(vc_model(model), n, seed, stream);
}

}  // namespace modalreg
