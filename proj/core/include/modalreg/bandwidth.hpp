#pragma once

#include <array>
#include <span>
#include <vector>

#include "modalreg/kernels.hpp"
#include "modalreg/modal_lpr.hpp"
#include "modalreg/varying_coeff.hpp"

namespace modalreg {

// Cubic modal linear pilot m(x) ~ a0 + a1 x + a2 x^2 + a3 x^3 fitted with a
// fixed response bandwidth (no kernel weighting in x).
struct PilotFit {
  std::array<double, 4> alpha{};
  std::vector<double> residuals;  // y_i - m(x_i)
  double pilot_h2 = 0.0;

  double mode_at(double x) const noexcept;
  // m''(x) = 2 a2 + 6 a3 x
  double second_derivative(double x) const noexcept;
};

// Kernel estimates of g(0), g''(0), g'''(0) for the error density.
struct DensityDerivatives {
  double g0 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
  std::array<double, 3> deriv_h{};  // bandwidths used for nu = 0, 2, 3
};

enum class PluginContext { Scalar, VaryingCoefficient };

// Constants of the AMISE surrogate K/(n h1 h2^3) + M h1^4 + N h2^4 + 2 L h1^2 h2^2.
struct PluginQuantities {
  double K = 0.0;
  double M = 0.0;
  double N = 0.0;
  double L = 0.0;
  double delta = 0.0;  // h2 / h1 at the optimum
  PluginContext context = PluginContext::Scalar;
};

// delta^2 = (sqrt(L^2 + 3 M N) + L) / N. Throws ZeroCurvature when undefined.
double plugin_delta(double M, double N, double L);

// 0.9 * min(sd, IQR/1.34) * n^(-1/5).
double normal_reference_scale(std::span<const double> values);
double normal_reference_bandwidth(std::span<const double> values);
// 1.4826 * median absolute deviation.
double mad_scale(std::span<const double> values);

PilotFit modal_linear_pilot(const Dataset& data, const EMConfig& cfg = {});

// Residuals whose density approximates g(. | x): y_i - m(x_i) under the pilot.
std::vector<double> adjusted_residuals(const PilotFit& pilot);

// Gaussian-kernel density derivative estimates at 0 with bandwidth
// derivative_bandwidth(nu, mad_scale(adjusted), n) for each order. Throws
// NonconcaveAtZero when the curvature estimate is not negative.
DensityDerivatives error_density_derivatives(std::span<const double> adjusted);
// Same estimator with caller-chosen bandwidths for nu = 0, 2, 3.
DensityDerivatives error_density_derivatives(std::span<const double> adjusted,
                                             const std::array<double, 3>& deriv_h);

// Bandwidth rule used for the nu-th derivative: scale * C_nu * n^(-1/(2nu+5)).
double derivative_bandwidth(int nu, double scale, std::size_t n);

// Gaussian KDE of the design density at every sample point, floored at
// 1e-3 of its maximum.
std::vector<double> design_density(std::span<const double> x);

PluginQuantities plugin_quantities(const Dataset& data, const PilotFit& pilot,
                                   const DensityDerivatives& dens, const KernelMoments& km);

// h1 = [3K / (4 n delta^5 (L + N delta^2))]^(1/8), h2 = delta h1.
Bandwidths optimal_bandwidths(const PluginQuantities& q, std::size_t n);

// Same algebraic form with the varying-coefficient constants.
Bandwidths vc_optimal_bandwidths(const PluginQuantities& q, std::size_t n);

// Full scalar pipeline: pilot, residual density, plug-in constants, bandwidths.
struct PluginSelection {
  PilotFit pilot;
  DensityDerivatives density;
  PluginQuantities quantities;
  Bandwidths bandwidths;
};
PluginSelection select_plugin_bandwidths(const Dataset& data, const KernelSpec& kernel = {},
                                         const EMConfig& pilot_cfg = {});

// ---- varying-coefficient plug-in ----

// Modal fit of y on x_j * (1, u, u^2, u^3): every coefficient function is
// approximated by a cubic in u.
struct VCPilotFit {
  Eigen::MatrixXd alpha;  // p x 4, row j holds the cubic for g_j
  std::vector<double> residuals;
  double pilot_h2 = 0.0;

  double coefficient(int j, double u) const noexcept;
  double coefficient_second_derivative(int j, double u) const noexcept;
};

VCPilotFit vc_modal_pilot(const VCDataset& data, const EMConfig& cfg = {});

// How the curvature term M~ is formed.
//  BiasSquared: constants read off the weighted AMISE of the bias and
//    covariance expressions with W = Delta Delta~^-1 Delta, i.e.
//    M~ = 1/4 int A' Delta~^-1 A, N~ = 1/4 int beta' Delta~^-1 beta,
//    L~ = -1/4 int A' Delta~^-1 beta, A = mu2 sum_j g_j'' alpha_j.
//  Literal: the printed display, using alpha_j'(u) in M~, Delta~ in N~ and
//    no g_j'' in L~.
enum class VCPluginForm { BiasSquared, Literal };

// Constants under a pilot error law that does not depend on (x, u) and a
// covariate law independent of u, so alpha_j, beta, Delta and Delta~ are
// moments of x scaled by g''(0), g'''(0) and g(0).
PluginQuantities vc_plugin_quantities(const VCDataset& data, const VCPilotFit& pilot,
                                      const DensityDerivatives& dens, const KernelMoments& km,
                                      VCPluginForm form = VCPluginForm::BiasSquared);

struct VCPluginSelection {
  VCPilotFit pilot;
  DensityDerivatives density;
  PluginQuantities quantities;
  Bandwidths bandwidths;
};
VCPluginSelection select_vc_plugin_bandwidths(const VCDataset& data, const KernelSpec& kernel = {},
                                              const EMConfig& pilot_cfg = {},
                                              VCPluginForm form = VCPluginForm::BiasSquared);

}  // namespace modalreg
