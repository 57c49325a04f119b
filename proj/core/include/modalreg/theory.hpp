#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "modalreg/kernels.hpp"
#include "modalreg/mixture.hpp"
#include "modalreg/modal_lpr.hpp"
#include "modalreg/scenarios.hpp"

namespace modalreg {

// Kernel matrices and the local error law entering the asymptotic bias and
// variance of the order-p estimator. Indices run from 0: S(j,l) = mu_{j+l},
// S~(j,l) = mu_{j+l+1}, S*(j,l) = nu_{j+l}, c_p(j) = mu_{p+1+j},
// c~_p(j) = mu_{p+2+j}, c*_p(j) = mu_j.
struct TheoryQuantities {
  int p = 1;
  KernelMoments moments;
  Eigen::MatrixXd S, S_tilde, S_star;
  Eigen::VectorXd c_p, c_tilde, c_star;
  double g0 = 0.0, g2 = 0.0, g3 = 0.0;
  double f = 0.0;
  double gamma = 0.0;  // g''(0 | x0) f(x0)

  double variance(int v, std::size_t n, const Bandwidths& bw) const;
  // p - v odd; m_p1 = m^(p+1)(x0).
  double bias(int v, const Bandwidths& bw, double m_p1) const;
  // p - v even; gamma_ratio = Gamma'(x0) / Gamma(x0).
  double bias_even(int v, const Bandwidths& bw, double m_p1, double m_p2, double gamma_ratio) const;
};

TheoryQuantities theory_quantities(const KernelSpec& kernel, int p, const ModalErrorDerivatives& g,
                                   double f);

// Local quantities of the varying-coefficient estimator at u0 for an error
// law that may depend on u only: Delta = g'' E[xx'], Delta~ = g E[xx'],
// alpha_j = g'' E[x x_j], beta = g''' E[x].
struct VCTheoryQuantities {
  KernelMoments moments;
  Eigen::MatrixXd Delta, Delta_tilde;
  Eigen::MatrixXd alpha;  // column j is alpha_j
  Eigen::VectorXd beta;
  double f = 0.0;

  Eigen::MatrixXd covariance(std::size_t n, const Bandwidths& bw) const;
  // gpp holds g_j''(u0).
  Eigen::VectorXd bias(const Bandwidths& bw, const Eigen::VectorXd& gpp) const;
};

VCTheoryQuantities vc_theory_quantities(const Eigen::MatrixXd& second_moment,
                                        const Eigen::VectorXd& first_moment,
                                        const ModalErrorDerivatives& g, double f,
                                        const KernelSpec& kernel);

// E[x x'] and E[x] for x = (1, x1, x2) with (x1, x2) standard normal and
// correlation rho, by tensor Gauss-Legendre quadrature of the joint density.
void correlated_normal_moments(double rho, Eigen::MatrixXd& second, Eigen::VectorXd& first);

// Largest gap between the empirical CDF of `z` and the standard normal CDF.
double ks_distance_normal(std::vector<double> z);

struct TheoryCheckConfig {
  Scenario scenario = homoscedastic_linear(1.0, 2.0, 1.0);
  double x0 = 0.5;  // u0 for varying-coefficient scenarios
  Bandwidths bw{0.5, 0.1};
  std::size_t n = 20000;
  int replications = 400;
  std::uint64_t seed = 0;
  int threads = 1;
  EMConfig em{};

  void validate() const;
};

struct TheoryCheckReport {
  double truth = 0.0;
  double empirical_bias = 0.0;
  double bias_standard_error = 0.0;
  double empirical_variance = 0.0;
  double theoretical_bias = 0.0;
  double theoretical_variance = 0.0;
  double variance_ratio = 0.0;
  // (estimate - empirical mean) / theoretical sd against N(0, 1).
  double ks_distance = 0.0;
  // (estimate - truth - theoretical bias) / theoretical sd against N(0, 1).
  double ks_distance_centered = 0.0;
  int replications = 0;
  int failures = 0;
  std::vector<double> estimates;
};

// Monte-Carlo check of the local linear (v = 0) variance and bias formulas
// at x0 for a scalar scenario with uniform design. Throws RateViolation when
// n h1 h2^5 < 1e-2 or h1^2 / h2 > 10.
TheoryCheckReport mc_theory_check(const TheoryCheckConfig& cfg);

struct VCTheoryCheckReport {
  Eigen::VectorXd truth;
  Eigen::VectorXd empirical_bias;
  Eigen::MatrixXd empirical_covariance;
  Eigen::VectorXd theoretical_bias;
  Eigen::MatrixXd theoretical_covariance;
  Eigen::VectorXd variance_ratios;  // diagonal, empirical / theoretical
  int replications = 0;
  int failures = 0;
};

// Varying-coefficient analogue at u0 = cfg.x0.
VCTheoryCheckReport vc_theory_check(const TheoryCheckConfig& cfg);

}  // namespace modalreg
