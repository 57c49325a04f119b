#include "modalreg/local_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "modalreg/error.hpp"
#include "modalreg/kernels.hpp"

namespace modalreg {
namespace {

constexpr double kRidge = 1e-10;
constexpr double kMaxCondition = 1e12;
constexpr double kTieTolerance = 1e-10;
constexpr int kProfilePoints = 41;

double sorted_quantile(const std::vector<double>& sorted, double level) {
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double local_objective(const LocalProblem& problem, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd residual = problem.response - problem.design * theta;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < residual.size(); ++i)
    sum += problem.kernel[i] * scaled_normal_pdf(residual[i], problem.h2);
  return sum;
}

Eigen::VectorXd local_responsibilities(const LocalProblem& problem,
                                       const Eigen::VectorXd& theta) {
  const Eigen::Index m = problem.rows();
  if (m == 0) fail(ErrorCode::DegenerateWindow, "no observation inside the kernel window");
  const Eigen::VectorXd residual = problem.response - problem.design * theta;
  Eigen::VectorXd logw(m);
  for (Eigen::Index i = 0; i < m; ++i)
    logw[i] = std::log(problem.kernel[i]) + log_normal_pdf(residual[i] / problem.h2);
  const double top = logw.maxCoeff();
  Eigen::VectorXd w = (logw.array() - top).exp();
  return w / w.sum();
}

Eigen::VectorXd weighted_least_squares(const Eigen::MatrixXd& design,
                                       const Eigen::VectorXd& response,
                                       const Eigen::VectorXd& weights) {
  const Eigen::Index q = design.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(q, q);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(q);
  for (Eigen::Index a = 0; a < q; ++a) {
    const Eigen::VectorXd wa = design.col(a).cwiseProduct(weights);
    rhs[a] = wa.dot(response);
    for (Eigen::Index b = 0; b <= a; ++b) gram(a, b) = gram(b, a) = wa.dot(design.col(b));
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || !(hi / lo <= kMaxCondition))
    fail(ErrorCode::SingularDesign,
         "weighted design is rank deficient (too few distinct points in window)");

  Eigen::MatrixXd stabilized = gram;
  stabilized.diagonal().array() += kRidge * gram.trace() / static_cast<double>(q);
  const Eigen::LLT<Eigen::MatrixXd> llt(stabilized);
  Eigen::VectorXd b = llt.solve(rhs);
  b += llt.solve(rhs - gram * b);
  return b;
}

namespace {

// Fills `weights` with the normalized responsibilities at theta and returns
// the objective sum_i K_i phi_h2(r_i), both from one pass over the rows.
double weigh(const LocalProblem& problem, const Eigen::VectorXd& log_kernel,
             const Eigen::VectorXd& theta, Eigen::VectorXd& weights) {
  const Eigen::VectorXd residual = problem.response - problem.design * theta;
  const double inv_h2 = 1.0 / problem.h2;
  weights.resize(residual.size());
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    const double t = residual[i] * inv_h2;
    weights[i] = log_kernel[i] - 0.5 * t * t;
    top = std::max(top, weights[i]);
  }
  if (!std::isfinite(top)) fail(ErrorCode::DegenerateWindow, "all kernel weights vanish");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    weights[i] = std::exp(weights[i] - top);
    sum += weights[i];
  }
  weights /= sum;
  return std::exp(top) * sum * kInvSqrt2Pi * inv_h2;
}

}  // namespace

EmRun run_modal_em(const LocalProblem& problem, Eigen::VectorXd start,
                   const EmSettings& settings, bool record_trace) {
  if (problem.rows() == 0) fail(ErrorCode::DegenerateWindow, "no observation inside the kernel window");
  const Eigen::VectorXd log_kernel = problem.kernel.array().log();
  Eigen::VectorXd weights;
  EmRun run;
  run.theta = std::move(start);
  run.objective = weigh(problem, log_kernel, run.theta, weights);
  for (int it = 0; it < settings.max_iter; ++it) {
    Eigen::VectorXd next = weighted_least_squares(problem.design, problem.response, weights);
    const double obj = weigh(problem, log_kernel, next, weights);
    const double step = (next - run.theta).cwiseAbs().maxCoeff();
    const double change = std::abs(obj - run.objective);
    const double scale = std::abs(run.objective);
    run.theta = std::move(next);
    run.objective = obj;
    run.iterations = it + 1;
    if (record_trace) run.trace.push_back(obj);
    if ((scale > 0.0 && change < settings.tol_obj * scale) || step < settings.tol_param) {
      run.converged = true;
      break;
    }
  }
  return run;
}

std::vector<double> start_quantile_levels(int n_starts) {
  const int extra = n_starts - 1;
  if (extra <= 0) return {};
  if (extra == 4) return {0.10, 0.35, 0.65, 0.90};
  if (extra == 1) return {0.5};
  std::vector<double> levels(extra);
  for (int i = 0; i < extra; ++i) levels[i] = 0.10 + 0.80 * i / (extra - 1);
  return levels;
}

double sample_quantile(std::vector<double> values, double level) {
  require(!values.empty(), "sample_quantile: empty sample");
  std::sort(values.begin(), values.end());
  return sorted_quantile(values, level);
}

MultiStartRun multi_start_em(const LocalProblem& problem, const EmSettings& settings,
                             int n_starts) {
  require(n_starts >= 1, "n_starts must be at least 1");
  if (problem.rows() == 0)
    fail(ErrorCode::DegenerateWindow, "no observation inside the kernel window");

  MultiStartRun out;
  out.initial = weighted_least_squares(problem.design, problem.response, problem.kernel);

  std::vector<Eigen::VectorXd> starts{out.initial};
  if (n_starts > 1) {
    const Eigen::VectorXd resid = problem.response - problem.design * out.initial;
    std::vector<double> r(resid.data(), resid.data() + resid.size());
    std::sort(r.begin(), r.end());
    for (double level : start_quantile_levels(n_starts)) {
      Eigen::VectorXd s = out.initial;
      s[0] += sorted_quantile(r, level);
      starts.push_back(std::move(s));
    }
    // Profile scan over intercept shifts; its best point is one more start.
    Eigen::VectorXd best_shift = out.initial;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kProfilePoints; ++k) {
      Eigen::VectorXd s = out.initial;
      s[0] += sorted_quantile(r, (k + 0.5) / kProfilePoints);
      const double v = local_objective(problem, s);
      if (v > best_value) {
        best_value = v;
        best_shift = std::move(s);
      }
    }
    starts.push_back(std::move(best_shift));
  }

  bool have_best = false;
  std::optional<Error> first_error;
  for (const auto& s : starts) {
    ++out.starts_used;
    try {
      EmRun run = run_modal_em(problem, s, settings);
      out.start_objectives.push_back(run.objective);
      if (!have_best) {
        out.best = std::move(run);
        have_best = true;
        continue;
      }
      const double tie = kTieTolerance * std::max(std::abs(out.best.objective), std::abs(run.objective));
      if (run.objective > out.best.objective + tie) {
        out.best = std::move(run);
      } else if (std::abs(run.objective - out.best.objective) <= tie) {
        const double d_run = std::abs(run.theta[0] - out.initial[0]);
        const double d_best = std::abs(out.best.theta[0] - out.initial[0]);
        if (d_run < d_best) out.best = std::move(run);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularDesign) throw;
      out.start_objectives.push_back(-std::numeric_limits<double>::infinity());
      if (!first_error) first_error = e;
    }
  }
  if (!have_best) throw *first_error;
  return out;
}

}  // namespace modalreg
