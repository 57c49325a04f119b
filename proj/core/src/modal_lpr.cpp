#include "modalreg/modal_lpr.hpp"

#include <cmath>
#include <limits>

#include "modalreg/parallel.hpp"

namespace modalreg {
namespace {

double factorial(int v) {
  double r = 1.0;
  for (int k = 2; k <= v; ++k) r *= k;
  return r;
}

ModalCoefficients from_scaled(const Eigen::VectorXd& theta, double center, double scale) {
  ModalCoefficients c;
  c.center = center;
  c.beta.resize(theta.size());
  double s = 1.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    c.beta[j] = theta[j] / s;
    s *= scale;
  }
  return c;
}

Eigen::VectorXd to_scaled(const ModalCoefficients& c, double scale) {
  Eigen::VectorXd theta(c.beta.size());
  double s = 1.0;
  for (std::size_t j = 0; j < c.beta.size(); ++j) {
    theta[j] = c.beta[j] * s;
    s *= scale;
  }
  return theta;
}

void check_finite(const ModalCoefficients& theta) {
  for (double b : theta.beta)
    require(std::isfinite(b), "coefficients must be finite");
  require(std::isfinite(theta.center), "center must be finite");
}

PointFit failed_point(double x0, int p, const Error& e) {
  PointFit f;
  f.coefficients.center = x0;
  f.coefficients.beta.assign(p + 1, std::numeric_limits<double>::quiet_NaN());
  f.objective = std::numeric_limits<double>::quiet_NaN();
  f.failure = e.code();
  f.failure_message = e.what();
  return f;
}

}  // namespace

Dataset::Dataset(std::vector<double> x_values, std::vector<double> y_values)
    : x(std::move(x_values)), y(std::move(y_values)) {
  if (x.size() != y.size()) fail(ErrorCode::DimensionError, "x and y lengths differ");
  require(x.size() >= 2, "dataset needs at least two observations");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      fail(ErrorCode::NonFiniteError, "non-finite value in row " + std::to_string(i + 1));
}

void Bandwidths::validate() const {
  require(std::isfinite(h1) && h1 > 0.0, "bandwidth h1 must be positive and finite");
  require(std::isfinite(h2) && h2 > 0.0, "bandwidth h2 must be positive and finite");
}

double ModalCoefficients::derivative(int v) const {
  require(v >= 0 && v <= order(), "derivative order exceeds polynomial order");
  return factorial(v) * beta[v];
}

void EMConfig::validate() const {
  require(max_iter >= 1, "max_iter must be >= 1");
  require(tol_obj > 0.0 && tol_param > 0.0, "tolerances must be positive");
  require(n_starts >= 1, "n_starts must be >= 1");
  require(order >= 0, "order must be >= 0");
}

std::vector<double> CurveEstimate::values() const {
  std::vector<double> out;
  out.reserve(fits.size());
  for (const auto& f : fits)
    out.push_back(f.ok() ? f.coefficients.derivative(derivative_order)
                         : std::numeric_limits<double>::quiet_NaN());
  return out;
}

std::size_t CurveEstimate::failures() const {
  std::size_t n = 0;
  for (const auto& f : fits) n += f.ok() ? 0 : 1;
  return n;
}

LocalProblem make_local_problem(const Dataset& data, double x0, const Bandwidths& bw, int p,
                                const KernelSpec& kernel) {
  bw.validate();
  std::vector<Eigen::Index> active;
  std::vector<double> k;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double w = scaled_kernel(kernel, data.x[i] - x0, bw.h1);
    if (w > 0.0) {
      active.push_back(static_cast<Eigen::Index>(i));
      k.push_back(w);
    }
  }
  LocalProblem prob;
  const auto m = static_cast<Eigen::Index>(active.size());
  prob.design.resize(m, p + 1);
  prob.response.resize(m);
  prob.kernel = Eigen::Map<const Eigen::VectorXd>(k.data(), m);
  prob.h2 = bw.h2;
  for (Eigen::Index r = 0; r < m; ++r) {
    const double t = (data.x[active[r]] - x0) / bw.h1;
    double pw = 1.0;
    for (int j = 0; j <= p; ++j) {
      prob.design(r, j) = pw;
      pw *= t;
    }
    prob.response[r] = data.y[active[r]];
  }
  return prob;
}

double objective(const Dataset& data, const ModalCoefficients& theta, const Bandwidths& bw,
                 const KernelSpec& kernel) {
  bw.validate();
  check_finite(theta);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double k = scaled_kernel(kernel, data.x[i] - theta.center, bw.h1);
    if (k == 0.0) continue;
    const double d = data.x[i] - theta.center;
    double fit = 0.0;
    double pw = 1.0;
    for (double b : theta.beta) {
      fit += b * pw;
      pw *= d;
    }
    sum += k * scaled_normal_pdf(data.y[i] - fit, bw.h2);
  }
  return sum / static_cast<double>(data.size());
}

std::vector<double> e_step(const Dataset& data, const ModalCoefficients& theta,
                           const Bandwidths& bw, const KernelSpec& kernel) {
  check_finite(theta);
  const LocalProblem prob = make_local_problem(data, theta.center, bw, theta.order(), kernel);
  if (prob.rows() == 0)
    fail(ErrorCode::DegenerateWindow, "no observation inside the h1 window at x0 = " +
                                          std::to_string(theta.center));
  const Eigen::VectorXd w = local_responsibilities(prob, to_scaled(theta, bw.h1));
  std::vector<double> out(data.size(), 0.0);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (scaled_kernel(kernel, data.x[i] - theta.center, bw.h1) > 0.0) out[i] = w[r++];
  return out;
}

ModalCoefficients m_step(const Dataset& data, std::span<const double> weights, double x0, int p,
                         double scale) {
  require(weights.size() == data.size(), "m_step: one weight per observation required");
  require(p >= 0 && scale > 0.0, "m_step: invalid order or scale");
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd design(n, p + 1);
  Eigen::VectorXd y(n);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (data.x[i] - x0) / scale;
    double pw = 1.0;
    for (int j = 0; j <= p; ++j) {
      design(i, j) = pw;
      pw *= t;
    }
    y[i] = data.y[i];
    w[i] = weights[i];
  }
  return from_scaled(weighted_least_squares(design, y, w), x0, scale);
}

PointFit fit_point(const Dataset& data, double x0, const Bandwidths& bw, const EMConfig& cfg) {
  cfg.validate();
  const LocalProblem prob = make_local_problem(data, x0, bw, cfg.order, cfg.kernel);
  if (prob.rows() == 0)
    fail(ErrorCode::DegenerateWindow,
         "no observation inside the h1 window at x0 = " + std::to_string(x0));
  const MultiStartRun ms = multi_start_em(prob, cfg.settings(), cfg.n_starts);
  PointFit f;
  f.coefficients = from_scaled(ms.best.theta, x0, bw.h1);
  f.objective = ms.best.objective / static_cast<double>(data.size());
  f.iterations = ms.best.iterations;
  f.converged = ms.best.converged;
  f.n_starts_used = ms.starts_used;
  f.start_objectives = ms.start_objectives;
  for (double& o : f.start_objectives) o /= static_cast<double>(data.size());
  return f;
}

EmPath em_iterate(const Dataset& data, double x0, const Bandwidths& bw, const EMConfig& cfg,
                  const ModalCoefficients& start) {
  cfg.validate();
  check_finite(start);
  const LocalProblem prob = make_local_problem(data, x0, bw, start.order(), cfg.kernel);
  if (prob.rows() == 0)
    fail(ErrorCode::DegenerateWindow, "no observation inside the h1 window");
  const Eigen::VectorXd theta0 = to_scaled(start, bw.h1);
  const EmRun run = run_modal_em(prob, theta0, cfg.settings(), true);
  const double n = static_cast<double>(data.size());
  EmPath path;
  path.start = start;
  path.start.center = x0;
  path.final = from_scaled(run.theta, x0, bw.h1);
  path.objectives.push_back(local_objective(prob, theta0) / n);
  for (double o : run.trace) path.objectives.push_back(o / n);
  path.iterations = run.iterations;
  path.converged = run.converged;
  return path;
}

CurveEstimate fit_curve(const Dataset& data, std::span<const double> grid, const Bandwidths& bw,
                        const EMConfig& cfg, int v, int threads) {
  cfg.validate();
  bw.validate();
  require(!grid.empty(), "fit_curve: empty grid");
  require(v >= 0 && v <= cfg.order, "fit_curve: derivative order must not exceed p");
  CurveEstimate curve;
  curve.grid.assign(grid.begin(), grid.end());
  curve.fits.resize(grid.size());
  curve.derivative_order = v;
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    try {
      curve.fits[i] = fit_point(data, grid[i], bw, cfg);
    } catch (const Error& e) {
      curve.fits[i] = failed_point(grid[i], cfg.order, e);
    }
  });
  return curve;
}

double local_constant_mode(const Dataset& data, double x0, const Bandwidths& bw,
                           const EMConfig& cfg) {
  EMConfig c = cfg;
  c.order = 0;
  return fit_point(data, x0, bw, c).coefficients.beta[0];
}

}  // namespace modalreg
