#include "modalreg/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace modalreg {
namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double e : v) ss += (e - m) * (e - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// int (phi^(s))^2 = (2s)! / (2^(2s+1) s! sqrt(pi))
double roughness_normal_derivative(int s) {
  double num = 1.0;
  for (int k = 2; k <= 2 * s; ++k) num *= k;
  double den = std::pow(2.0, 2 * s + 1) * kSqrtPi;
  for (int k = 2; k <= s; ++k) den *= k;
  return num / den;
}

// Derivatives of the standard normal density.
double phi_derivative(int nu, double t) {
  const double p = normal_pdf(t);
  switch (nu) {
    case 0: return p;
    case 2: return (t * t - 1.0) * p;
    case 3: return (3.0 * t - t * t * t) * p;
  }
  require(false, "unsupported derivative order");
  return 0.0;
}

// Sum_k theta_k ((x - shift)/scale)^k re-expanded in powers of x.
std::array<double, 4> expand_cubic(const Eigen::VectorXd& theta, double shift, double scale) {
  std::array<double, 4> a{};
  const double binom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  for (int k = 0; k < 4; ++k) {
    const double c = theta[k] / std::pow(scale, k);
    for (int j = 0; j <= k; ++j) a[j] += c * binom[k][j] * std::pow(-shift, k - j);
  }
  return a;
}

struct CubicBasis {
  double shift = 0.0;
  double scale = 1.0;
  explicit CubicBasis(std::span<const double> v) : shift(mean_of(v)), scale(sd_of(v)) {
    if (!(scale > 0.0)) fail(ErrorCode::SingularDesign, "pilot design has zero spread");
  }
  void fill(double x, double* row) const {
    const double z = (x - shift) / scale;
    row[0] = 1.0;
    row[1] = z;
    row[2] = z * z;
    row[3] = z * z * z;
  }
};

// Modal EM on a global design with unit kernel weights and a normal-reference
// response bandwidth taken from the least-squares residuals.
struct GlobalModalFit {
  Eigen::VectorXd theta;
  Eigen::VectorXd residuals;
  double h2 = 0.0;
};

GlobalModalFit global_modal_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                const EMConfig& cfg) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(y.size());
  GlobalModalFit out;
  out.theta = weighted_least_squares(design, y, ones);
  out.residuals = y - design * out.theta;
  const std::span<const double> r(out.residuals.data(), static_cast<std::size_t>(out.residuals.size()));
  out.h2 = normal_reference_bandwidth(r);
  // Residuals at round-off level count as an exact fit.
  if (!(out.h2 > 1e-10 * y.cwiseAbs().maxCoeff())) {
    out.residuals.setZero();
    out.h2 = 0.0;
    return out;
  }

  LocalProblem prob{design, y, ones, out.h2};
  const MultiStartRun ms = multi_start_em(prob, cfg.settings(), cfg.n_starts);
  out.theta = ms.best.theta;
  out.residuals = y - design * out.theta;
  return out;
}

}  // namespace

double PilotFit::mode_at(double x) const noexcept {
  return alpha[0] + x * (alpha[1] + x * (alpha[2] + x * alpha[3]));
}

double PilotFit::second_derivative(double x) const noexcept {
  return 2.0 * alpha[2] + 6.0 * alpha[3] * x;
}

double VCPilotFit::coefficient(int j, double u) const noexcept {
  return alpha(j, 0) + u * (alpha(j, 1) + u * (alpha(j, 2) + u * alpha(j, 3)));
}

double VCPilotFit::coefficient_second_derivative(int j, double u) const noexcept {
  return 2.0 * alpha(j, 2) + 6.0 * alpha(j, 3) * u;
}

double normal_reference_scale(std::span<const double> values) {
  require(values.size() >= 2, "scale estimate needs at least two values");
  const double sd = sd_of(values);
  std::vector<double> v(values.begin(), values.end());
  const double iqr = sample_quantile(v, 0.75) - sample_quantile(v, 0.25);
  return iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
}

double mad_scale(std::span<const double> values) {
  require(!values.empty(), "scale estimate needs a sample");
  std::vector<double> v(values.begin(), values.end());
  const double med = sample_quantile(v, 0.5);
  for (double& t : v) t = std::abs(t - med);
  return 1.4826 * sample_quantile(std::move(v), 0.5);
}

double normal_reference_bandwidth(std::span<const double> values) {
  return 0.9 * normal_reference_scale(values) *
         std::pow(static_cast<double>(values.size()), -0.2);
}

double plugin_delta(double M, double N, double L) {
  if (!(N > 0.0) || (M <= 0.0 && L <= 0.0))
    fail(ErrorCode::ZeroCurvature, "plug-in ratio delta is undefined (no curvature signal)");
  const double d2 = (std::sqrt(L * L + 3.0 * M * N) + L) / N;
  if (!(d2 > 0.0) || !std::isfinite(d2))
    fail(ErrorCode::ZeroCurvature, "plug-in ratio delta is not positive");
  return std::sqrt(d2);
}

PilotFit modal_linear_pilot(const Dataset& data, const EMConfig& cfg) {
  require(data.size() >= 8, "cubic pilot needs at least 8 observations");
  const CubicBasis basis(data.x);
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd design(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    double row[4];
    basis.fill(data.x[i], row);
    for (int k = 0; k < 4; ++k) design(i, k) = row[k];
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data.y.data(), n);
  const GlobalModalFit fit = global_modal_fit(design, y, cfg);

  PilotFit p;
  p.alpha = expand_cubic(fit.theta, basis.shift, basis.scale);
  p.residuals.assign(fit.residuals.data(), fit.residuals.data() + n);
  p.pilot_h2 = fit.h2;
  return p;
}

std::vector<double> adjusted_residuals(const PilotFit& pilot) { return pilot.residuals; }

double derivative_bandwidth(int nu, double scale, std::size_t n) {
  const double c = std::pow((2.0 * nu + 1.0) * roughness_normal_derivative(nu) /
                                roughness_normal_derivative(nu + 2),
                            1.0 / (2.0 * nu + 5.0));
  return scale * c * std::pow(static_cast<double>(n), -1.0 / (2.0 * nu + 5.0));
}

DensityDerivatives error_density_derivatives(std::span<const double> adjusted,
                                             const std::array<double, 3>& deriv_h) {
  require(!adjusted.empty(), "density derivatives need a nonempty residual sample");
  for (double h : deriv_h) require(h > 0.0 && std::isfinite(h), "derivative bandwidths must be positive");
  const double n = static_cast<double>(adjusted.size());
  const int orders[3] = {0, 2, 3};
  double est[3] = {0.0, 0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    const double h = deriv_h[k];
    double s = 0.0;
    for (double e : adjusted) s += phi_derivative(orders[k], (0.0 - e) / h);
    est[k] = s / (n * std::pow(h, orders[k] + 1));
  }
  DensityDerivatives d;
  d.g0 = est[0];
  d.g2 = est[1];
  d.g3 = est[2];
  d.deriv_h = deriv_h;
  if (!(d.g2 < 0.0))
    fail(ErrorCode::NonconcaveAtZero,
         "estimated error density is not concave at 0; supply bandwidths manually");
  return d;
}

DensityDerivatives error_density_derivatives(std::span<const double> adjusted) {
  require(adjusted.size() >= 2, "density derivatives need at least two residuals");
  const double s = mad_scale(adjusted);
  if (!(s > 0.0))
    fail(ErrorCode::NonconcaveAtZero, "residuals have zero spread; density derivatives undefined");
  const std::size_t n = adjusted.size();
  return error_density_derivatives(
      adjusted, {derivative_bandwidth(0, s, n), derivative_bandwidth(2, s, n),
                 derivative_bandwidth(3, s, n)});
}

std::vector<double> design_density(std::span<const double> x) {
  const double h = 1.06 * normal_reference_scale(x) * std::pow(static_cast<double>(x.size()), -0.2);
  require(h > 0.0, "design has zero spread");
  std::vector<double> f(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = 0.0;
    for (double xj : x) s += normal_pdf((x[i] - xj) / h);
    f[i] = s / (static_cast<double>(x.size()) * h);
  }
  const double floor = 1e-3 * *std::max_element(f.begin(), f.end());
  for (double& v : f) v = std::max(v, floor);
  return f;
}

PluginQuantities plugin_quantities(const Dataset& data, const PilotFit& pilot,
                                   const DensityDerivatives& dens, const KernelMoments& km) {
  if (!(dens.g2 < 0.0)) fail(ErrorCode::NonconcaveAtZero, "g''(0) estimate must be negative");
  require(dens.g0 > 0.0, "g(0) estimate must be positive");
  require(km.mu.size() > 2 && !km.nu.empty(), "kernel moments through order 2 required");
  const std::vector<double> f = design_density(data.x);
  const double n = static_cast<double>(data.size());
  const double mu2 = km.mu[2];
  const double h2_bias = -dens.g3 / (2.0 * dens.g2);

  PluginQuantities q;
  q.context = PluginContext::Scalar;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double b1 = 0.5 * pilot.second_derivative(data.x[i]) * mu2;
    q.K += dens.g0 * km.tilde_nu * km.nu[0] / (dens.g2 * dens.g2 * f[i]);
    q.M += b1 * b1;
    q.N += h2_bias * h2_bias;
    q.L += b1 * h2_bias;
  }
  q.K /= n;
  q.M /= n;
  q.N /= n;
  q.L /= n;
  q.delta = plugin_delta(q.M, q.N, q.L);
  return q;
}

namespace {

Bandwidths closed_form_bandwidths(double K, double N, double L, double delta, std::size_t n) {
  const double denom_term = L + N * delta * delta;
  if (!(delta > 0.0) || !(denom_term > 0.0) || !(K > 0.0) || n == 0)
    fail(ErrorCode::InvalidPlugin, "plug-in quantities violate delta > 0, L + N delta^2 > 0, K > 0");
  const double h1 = std::pow(3.0 * K / (4.0 * static_cast<double>(n) * std::pow(delta, 5) * denom_term),
                             0.125);
  if (!std::isfinite(h1) || !(h1 > 0.0)) fail(ErrorCode::InvalidPlugin, "bandwidth formula overflowed");
  return Bandwidths{h1, delta * h1};
}

}  // namespace

Bandwidths optimal_bandwidths(const PluginQuantities& q, std::size_t n) {
  return closed_form_bandwidths(q.K, q.N, q.L, q.delta, n);
}

Bandwidths vc_optimal_bandwidths(const PluginQuantities& q, std::size_t n) {
  // The display's delta^5 is read as delta~^5.
  return closed_form_bandwidths(q.K, q.N, q.L, q.delta, n);
}

PluginSelection select_plugin_bandwidths(const Dataset& data, const KernelSpec& kernel,
                                         const EMConfig& pilot_cfg) {
  PluginSelection s;
  s.pilot = modal_linear_pilot(data, pilot_cfg);
  s.density = error_density_derivatives(adjusted_residuals(s.pilot));
  s.quantities = plugin_quantities(data, s.pilot, s.density, kernel_moments(kernel, 1));
  s.bandwidths = optimal_bandwidths(s.quantities, data.size());
  return s;
}

VCPilotFit vc_modal_pilot(const VCDataset& data, const EMConfig& cfg) {
  const int p = data.dims();
  require(data.size() >= static_cast<std::size_t>(8 * p), "VC pilot needs at least 8p observations");
  const CubicBasis basis(data.u);
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd design(n, 4 * p);
  for (Eigen::Index i = 0; i < n; ++i) {
    double row[4];
    basis.fill(data.u[i], row);
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < 4; ++k) design(i, 4 * j + k) = data.X(i, j) * row[k];
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data.y.data(), n);
  const GlobalModalFit fit = global_modal_fit(design, y, cfg);

  VCPilotFit out;
  out.alpha.resize(p, 4);
  for (int j = 0; j < p; ++j) {
    const auto a = expand_cubic(fit.theta.segment(4 * j, 4), basis.shift, basis.scale);
    for (int k = 0; k < 4; ++k) out.alpha(j, k) = a[k];
  }
  out.residuals.assign(fit.residuals.data(), fit.residuals.data() + n);
  out.pilot_h2 = fit.h2;
  return out;
}

PluginQuantities vc_plugin_quantities(const VCDataset& data, const VCPilotFit& pilot,
                                      const DensityDerivatives& dens, const KernelMoments& km,
                                      VCPluginForm form) {
  if (!(dens.g2 < 0.0)) fail(ErrorCode::NonconcaveAtZero, "g''(0) estimate must be negative");
  require(dens.g0 > 0.0, "g(0) estimate must be positive");
  const int p = data.dims();
  const double n = static_cast<double>(data.size());
  const double mu2 = km.mu[2];
  const Eigen::MatrixXd second = data.X.transpose() * data.X / n;  // E[x x^T]
  const Eigen::MatrixXd dtilde = dens.g0 * second;
  const Eigen::LDLT<Eigen::MatrixXd> dtilde_inv(dtilde);
  const Eigen::VectorXd beta = dens.g3 * second.col(0);
  const std::vector<double> f = design_density(data.u);

  PluginQuantities q;
  q.context = PluginContext::VaryingCoefficient;
  double inv_f = 0.0;
  for (double v : f) inv_f += 1.0 / v;
  q.K = p * km.tilde_nu * km.nu[0] * inv_f / n;

  if (form == VCPluginForm::BiasSquared) {
    const Eigen::VectorXd dinv_beta = dtilde_inv.solve(beta);
    Eigen::VectorXd gpp(p);
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (int j = 0; j < p; ++j) gpp[j] = pilot.coefficient_second_derivative(j, data.u[i]);
      const Eigen::VectorXd A = mu2 * dens.g2 * (second * gpp);
      q.M += 0.25 * A.dot(dtilde_inv.solve(A));
      q.L += -0.25 * A.dot(dinv_beta);
    }
    q.M /= n;
    q.L /= n;
    q.N = 0.25 * beta.dot(dinv_beta);
  } else {
    // alpha_j does not vary with u under the pilot, so alpha_j' = 0.
    q.M = 0.0;
    q.N = beta.dot(dtilde * beta);
    Eigen::VectorXd alpha_sum = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < p; ++j) alpha_sum += dens.g2 * second.col(j);
    q.L = -mu2 * alpha_sum.dot(dtilde_inv.solve(beta));
  }
  q.delta = plugin_delta(q.M, q.N, q.L);
  return q;
}

VCPluginSelection select_vc_plugin_bandwidths(const VCDataset& data, const KernelSpec& kernel,
                                              const EMConfig& pilot_cfg, VCPluginForm form) {
  VCPluginSelection s;
  s.pilot = vc_modal_pilot(data, pilot_cfg);
  s.density = error_density_derivatives(s.pilot.residuals);
  s.quantities = vc_plugin_quantities(data, s.pilot, s.density, kernel_moments(kernel, 1), form);
  s.bandwidths = vc_optimal_bandwidths(s.quantities, data.size());
  return s;
}

}  // namespace modalreg
