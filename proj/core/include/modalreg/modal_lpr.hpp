#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modalreg/error.hpp"
#include "modalreg/kernels.hpp"
#include "modalreg/local_em.hpp"

namespace modalreg {

// Observed sample (x_i, y_i), i = 1..n.
struct Dataset {
  std::vector<double> x;
  std::vector<double> y;

  Dataset() = default;
  // Validates equal lengths, n >= 2 and finite entries.
  Dataset(std::vector<double> x_values, std::vector<double> y_values);

  std::size_t size() const noexcept { return x.size(); }
};

// (h1, h2): predictor-space and response-space smoothing.
struct Bandwidths {
  double h1 = 0.0;
  double h2 = 0.0;

  void validate() const;
};

struct ModalCoefficients {
  std::vector<double> beta;  // beta_0..beta_p
  double center = 0.0;

  int order() const noexcept { return static_cast<int>(beta.size()) - 1; }
  // v! * beta_v
  double derivative(int v) const;
};

struct EMConfig {
  int max_iter = 500;
  double tol_obj = 1e-8;
  double tol_param = 1e-6;  // sup-change of (beta_0, h1 beta_1, ..., h1^p beta_p)
  int n_starts = 5;
  std::uint64_t seed = 0;
  int order = 1;
  KernelSpec kernel{};

  void validate() const;
  EmSettings settings() const { return {max_iter, tol_obj, tol_param}; }
};

struct PointFit {
  ModalCoefficients coefficients;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  int n_starts_used = 0;
  std::vector<double> start_objectives;
  // Set when the point could not be fitted (fit_curve only); coefficients
  // are NaN in that case.
  std::optional<ErrorCode> failure;
  std::string failure_message;

  bool ok() const noexcept { return !failure.has_value(); }
};

struct CurveEstimate {
  std::vector<double> grid;
  std::vector<PointFit> fits;
  int derivative_order = 0;

  // v! * beta_v at every grid point (NaN where the fit failed).
  std::vector<double> values() const;
  std::size_t failures() const;
};

// (1/n) sum_i K_h1(x_i - x0) phi_h2(y_i - sum_j beta_j (x_i - x0)^j).
double objective(const Dataset& data, const ModalCoefficients& theta, const Bandwidths& bw,
                 const KernelSpec& kernel = {});

// E-step responsibilities over all n observations (zero outside the window).
std::vector<double> e_step(const Dataset& data, const ModalCoefficients& theta,
                           const Bandwidths& bw, const KernelSpec& kernel = {});

// Weighted least squares on columns ((x_i - x0)/scale)^j, j = 0..p. The
// returned coefficients are on the original (x - x0)^j scale.
ModalCoefficients m_step(const Dataset& data, std::span<const double> weights, double x0, int p,
                         double scale = 1.0);

// Multi-start modal EM at x0.
PointFit fit_point(const Dataset& data, double x0, const Bandwidths& bw, const EMConfig& cfg);

// A single EM run from a given start, with the objective recorded after every
// iteration. Used to inspect ascent and fixed-point behaviour.
struct EmPath {
  ModalCoefficients start;
  ModalCoefficients final;
  std::vector<double> objectives;  // objectives[0] is the start's value
  int iterations = 0;
  bool converged = false;
};
EmPath em_iterate(const Dataset& data, double x0, const Bandwidths& bw, const EMConfig& cfg,
                  const ModalCoefficients& start);

// Independent fit_point per grid point; per-point failures are recorded,
// never thrown. Grid points may be fitted concurrently with identical results.
CurveEstimate fit_curve(const Dataset& data, std::span<const double> grid, const Bandwidths& bw,
                        const EMConfig& cfg, int v = 0, int threads = 1);

// Conditional mode of the joint kernel density estimate (p = 0).
double local_constant_mode(const Dataset& data, double x0, const Bandwidths& bw,
                           const EMConfig& cfg);

// The localized problem fit_point solves; exposed for oracles and
// congruence checks.
LocalProblem make_local_problem(const Dataset& data, double x0, const Bandwidths& bw, int p,
                                const KernelSpec& kernel);

}  // namespace modalreg
