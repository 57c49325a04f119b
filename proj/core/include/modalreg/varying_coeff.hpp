#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modalreg/modal_lpr.hpp"

namespace modalreg {

// Sample {(x_i, u_i, y_i)} for Mode(y | x, u) = sum_j g_j(u) x_j. The first
// covariate column is identically 1.
struct VCDataset {
  std::vector<double> u;
  Eigen::MatrixXd X;  // n x p
  std::vector<double> y;

  VCDataset() = default;
  VCDataset(std::vector<double> u_values, Eigen::MatrixXd covariates, std::vector<double> y_values);

  // Prepends the intercept column to `covariates` (n x (p-1)).
  static VCDataset with_intercept(std::vector<double> u_values, const Eigen::MatrixXd& covariates,
                                  std::vector<double> y_values);

  std::size_t size() const noexcept { return y.size(); }
  int dims() const noexcept { return static_cast<int>(X.cols()); }
};

// b_j = g_j(u0), c_j = g_j'(u0).
struct VCCoefficients {
  std::vector<double> b;
  std::vector<double> c;
  double center = 0.0;
};

struct VCPointFit {
  VCCoefficients coefficients;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  int n_starts_used = 0;
  std::vector<double> start_objectives;
  std::optional<ErrorCode> failure;
  std::string failure_message;

  bool ok() const noexcept { return !failure.has_value(); }
};

struct VCCurveEstimate {
  std::vector<double> grid;  // ascending
  std::vector<VCPointFit> fits;

  std::size_t failures() const;
};

// sum_i K_h1(u_i - u0) phi_h2(y_i - sum_j {b_j + c_j (u_i - u0)} x_ij).
// Note: not divided by n.
double vc_objective(const VCDataset& data, const VCCoefficients& theta, const Bandwidths& bw,
                    const KernelSpec& kernel = {});

std::vector<double> vc_e_step(const VCDataset& data, const VCCoefficients& theta,
                              const Bandwidths& bw, const KernelSpec& kernel = {});

// Weighted least squares on columns {x_ij, x_ij (u_i - u0)/scale}.
VCCoefficients vc_m_step(const VCDataset& data, std::span<const double> weights, double u0,
                         double scale = 1.0);

// Multi-start local linear modal EM at u0. The EM runs on
// theta = (b, h1 c); cfg.order is ignored.
VCPointFit vc_fit_point(const VCDataset& data, double u0, const Bandwidths& bw, const EMConfig& cfg);

struct VCEmPath {
  VCCoefficients final;
  std::vector<double> objectives;
  int iterations = 0;
  bool converged = false;
};
VCEmPath vc_em_iterate(const VCDataset& data, double u0, const Bandwidths& bw, const EMConfig& cfg,
                       const VCCoefficients& start);

VCCurveEstimate vc_fit_curves(const VCDataset& data, std::span<const double> grid,
                              const Bandwidths& bw, const EMConfig& cfg, int threads = 1);

// sum_j g_j(u) x_j with g linearly interpolated between grid fits. Throws
// OutOfRange outside the grid.
double vc_predict(const VCCurveEstimate& fit, double u, std::span<const double> x);

// Coefficient values at u, linearly interpolated.
std::vector<double> vc_coefficients_at(const VCCurveEstimate& fit, double u);

LocalProblem make_vc_local_problem(const VCDataset& data, double u0, const Bandwidths& bw,
                                   const KernelSpec& kernel);

}  // namespace modalreg
