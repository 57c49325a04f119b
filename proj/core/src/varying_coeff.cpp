#include "modalreg/varying_coeff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modalreg/parallel.hpp"

namespace modalreg {
namespace {

Eigen::VectorXd to_scaled(const VCCoefficients& c, double scale) {
  const auto p = static_cast<Eigen::Index>(c.b.size());
  Eigen::VectorXd theta(2 * p);
  for (Eigen::Index j = 0; j < p; ++j) {
    theta[j] = c.b[j];
    theta[p + j] = c.c[j] * scale;
  }
  return theta;
}

VCCoefficients from_scaled(const Eigen::VectorXd& theta, double center, double scale) {
  const Eigen::Index p = theta.size() / 2;
  VCCoefficients c;
  c.center = center;
  c.b.resize(p);
  c.c.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    c.b[j] = theta[j];
    c.c[j] = theta[p + j] / scale;
  }
  return c;
}

void check_theta(const VCDataset& data, const VCCoefficients& theta) {
  if (theta.b.size() != static_cast<std::size_t>(data.dims()) || theta.c.size() != theta.b.size())
    fail(ErrorCode::DimensionError, "coefficient length does not match covariate dimension");
  for (std::size_t j = 0; j < theta.b.size(); ++j)
    require(std::isfinite(theta.b[j]) && std::isfinite(theta.c[j]), "coefficients must be finite");
  require(std::isfinite(theta.center), "center must be finite");
}

VCPointFit failed_point(double u0, int p, const Error& e) {
  VCPointFit f;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  f.coefficients.center = u0;
  f.coefficients.b.assign(p, nan);
  f.coefficients.c.assign(p, nan);
  f.objective = nan;
  f.failure = e.code();
  f.failure_message = e.what();
  return f;
}

}  // namespace

VCDataset::VCDataset(std::vector<double> u_values, Eigen::MatrixXd covariates,
                     std::vector<double> y_values)
    : u(std::move(u_values)), X(std::move(covariates)), y(std::move(y_values)) {
  if (u.size() != y.size() || static_cast<std::size_t>(X.rows()) != y.size())
    fail(ErrorCode::DimensionError, "u, X and y must have the same number of rows");
  require(X.cols() >= 1, "covariate matrix needs at least the intercept column");
  require(y.size() >= 2, "dataset needs at least two observations");
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (!std::isfinite(u[i]) || !std::isfinite(y[i]) || !X.row(r).allFinite())
      fail(ErrorCode::NonFiniteError, "non-finite value in row " + std::to_string(i + 1));
    if (X(r, 0) != 1.0)
      fail(ErrorCode::DimensionError, "first covariate column must be identically 1");
  }
}

VCDataset VCDataset::with_intercept(std::vector<double> u_values, const Eigen::MatrixXd& covariates,
                                    std::vector<double> y_values) {
  Eigen::MatrixXd X(covariates.rows(), covariates.cols() + 1);
  X.col(0).setOnes();
  X.rightCols(covariates.cols()) = covariates;
  return VCDataset(std::move(u_values), std::move(X), std::move(y_values));
}

std::size_t VCCurveEstimate::failures() const {
  std::size_t n = 0;
  for (const auto& f : fits) n += f.ok() ? 0 : 1;
  return n;
}

LocalProblem make_vc_local_problem(const VCDataset& data, double u0, const Bandwidths& bw,
                                   const KernelSpec& kernel) {
  bw.validate();
  const Eigen::Index p = data.dims();
  std::vector<Eigen::Index> active;
  std::vector<double> k;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double w = scaled_kernel(kernel, data.u[i] - u0, bw.h1);
    if (w > 0.0) {
      active.push_back(static_cast<Eigen::Index>(i));
      k.push_back(w);
    }
  }
  LocalProblem prob;
  const auto m = static_cast<Eigen::Index>(active.size());
  prob.design.resize(m, 2 * p);
  prob.response.resize(m);
  prob.kernel = Eigen::Map<const Eigen::VectorXd>(k.data(), m);
  prob.h2 = bw.h2;
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = active[r];
    const double t = (data.u[i] - u0) / bw.h1;
    for (Eigen::Index j = 0; j < p; ++j) {
      prob.design(r, j) = data.X(i, j);
      prob.design(r, p + j) = data.X(i, j) * t;
    }
    prob.response[r] = data.y[i];
  }
  return prob;
}

double vc_objective(const VCDataset& data, const VCCoefficients& theta, const Bandwidths& bw,
                    const KernelSpec& kernel) {
  bw.validate();
  check_theta(data, theta);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double d = data.u[i] - theta.center;
    const double k = scaled_kernel(kernel, d, bw.h1);
    if (k == 0.0) continue;
    double fit = 0.0;
    for (std::size_t j = 0; j < theta.b.size(); ++j)
      fit += (theta.b[j] + theta.c[j] * d) * data.X(static_cast<Eigen::Index>(i), j);
    sum += k * scaled_normal_pdf(data.y[i] - fit, bw.h2);
  }
  return sum;
}

std::vector<double> vc_e_step(const VCDataset& data, const VCCoefficients& theta,
                              const Bandwidths& bw, const KernelSpec& kernel) {
  check_theta(data, theta);
  const LocalProblem prob = make_vc_local_problem(data, theta.center, bw, kernel);
  if (prob.rows() == 0) fail(ErrorCode::DegenerateWindow, "no observation inside the h1 window");
  const Eigen::VectorXd w = local_responsibilities(prob, to_scaled(theta, bw.h1));
  std::vector<double> out(data.size(), 0.0);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (scaled_kernel(kernel, data.u[i] - theta.center, bw.h1) > 0.0) out[i] = w[r++];
  return out;
}

VCCoefficients vc_m_step(const VCDataset& data, std::span<const double> weights, double u0,
                         double scale) {
  require(weights.size() == data.size(), "vc_m_step: one weight per observation required");
  require(scale > 0.0, "vc_m_step: scale must be positive");
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index p = data.dims();
  Eigen::MatrixXd design(n, 2 * p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (data.u[i] - u0) / scale;
    design.row(i).head(p) = data.X.row(i);
    design.row(i).tail(p) = data.X.row(i) * t;
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data.y.data(), n);
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), n);
  return from_scaled(weighted_least_squares(design, y, w), u0, scale);
}

VCPointFit vc_fit_point(const VCDataset& data, double u0, const Bandwidths& bw,
                        const EMConfig& cfg) {
  cfg.validate();
  const LocalProblem prob = make_vc_local_problem(data, u0, bw, cfg.kernel);
  if (prob.rows() == 0)
    fail(ErrorCode::DegenerateWindow,
         "no observation inside the h1 window at u0 = " + std::to_string(u0));
  const MultiStartRun ms = multi_start_em(prob, cfg.settings(), cfg.n_starts);
  VCPointFit f;
  f.coefficients = from_scaled(ms.best.theta, u0, bw.h1);
  f.objective = ms.best.objective;
  f.iterations = ms.best.iterations;
  f.converged = ms.best.converged;
  f.n_starts_used = ms.starts_used;
  f.start_objectives = ms.start_objectives;
  return f;
}

VCEmPath vc_em_iterate(const VCDataset& data, double u0, const Bandwidths& bw,
                       const EMConfig& cfg, const VCCoefficients& start) {
  cfg.validate();
  check_theta(data, start);
  const LocalProblem prob = make_vc_local_problem(data, u0, bw, cfg.kernel);
  if (prob.rows() == 0) fail(ErrorCode::DegenerateWindow, "no observation inside the h1 window");
  const Eigen::VectorXd theta0 = to_scaled(start, bw.h1);
  const EmRun run = run_modal_em(prob, theta0, cfg.settings(), true);
  VCEmPath path;
  path.final = from_scaled(run.theta, u0, bw.h1);
  path.objectives.push_back(local_objective(prob, theta0));
  path.objectives.insert(path.objectives.end(), run.trace.begin(), run.trace.end());
  path.iterations = run.iterations;
  path.converged = run.converged;
  return path;
}

VCCurveEstimate vc_fit_curves(const VCDataset& data, std::span<const double> grid,
                              const Bandwidths& bw, const EMConfig& cfg, int threads) {
  cfg.validate();
  bw.validate();
  require(!grid.empty(), "vc_fit_curves: empty grid");
  require(std::is_sorted(grid.begin(), grid.end()), "vc_fit_curves: grid must be ascending");
  VCCurveEstimate out;
  out.grid.assign(grid.begin(), grid.end());
  out.fits.resize(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    try {
      out.fits[i] = vc_fit_point(data, grid[i], bw, cfg);
    } catch (const Error& e) {
      out.fits[i] = failed_point(grid[i], data.dims(), e);
    }
  });
  return out;
}

std::vector<double> vc_coefficients_at(const VCCurveEstimate& fit, double u) {
  require(!fit.grid.empty(), "vc_predict: empty fit");
  if (!(u >= fit.grid.front() && u <= fit.grid.back()))
    fail(ErrorCode::OutOfRange, "u = " + std::to_string(u) + " outside fitted grid range");
  const auto it = std::lower_bound(fit.grid.begin(), fit.grid.end(), u);
  const auto hi = static_cast<std::size_t>(it - fit.grid.begin());
  const auto& fh = fit.fits[hi];
  if (!fh.ok()) fail(*fh.failure, "grid fit at u = " + std::to_string(fit.grid[hi]) + " failed");
  if (fit.grid[hi] == u || hi == 0) return fh.coefficients.b;
  const auto& fl = fit.fits[hi - 1];
  if (!fl.ok()) fail(*fl.failure, "grid fit at u = " + std::to_string(fit.grid[hi - 1]) + " failed");
  const double w = (u - fit.grid[hi - 1]) / (fit.grid[hi] - fit.grid[hi - 1]);
  std::vector<double> b(fh.coefficients.b.size());
  for (std::size_t j = 0; j < b.size(); ++j)
    b[j] = (1.0 - w) * fl.coefficients.b[j] + w * fh.coefficients.b[j];
  return b;
}

double vc_predict(const VCCurveEstimate& fit, double u, std::span<const double> x) {
  const std::vector<double> b = vc_coefficients_at(fit, u);
  if (x.size() != b.size()) fail(ErrorCode::DimensionError, "covariate vector has wrong length");
  double s = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) s += b[j] * x[j];
  return s;
}

}  // namespace modalreg
