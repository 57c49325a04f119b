#include "modalreg/baselines.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace modalreg {
namespace {

constexpr int kRobustMaxIter = 200;
constexpr double kMedianSmoothing = 1e-6;
constexpr double kRobustTol = 1e-10;
constexpr int kCvGridSize = 20;

struct LocalDesign {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  Eigen::VectorXd kernel;
  double scale = 1.0;  // slope column is (x - x0) / scale
};

LocalDesign scalar_design(const Dataset& data, double x0, double h, const KernelSpec& kernel) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (scaled_kernel(kernel, data.x[i] - x0, h) > 0.0) active.push_back(i);
  const auto m = static_cast<Eigen::Index>(active.size());
  LocalDesign d;
  // The window's own extent, so huge bandwidths keep a well-scaled design.
  double reach = 0.0;
  for (std::size_t i : active) reach = std::max(reach, std::abs(data.x[i] - x0));
  d.scale = reach > 0.0 ? std::min(h, reach) : h;
  d.design.resize(m, 2);
  d.response.resize(m);
  d.kernel.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const std::size_t i = active[r];
    d.design(r, 0) = 1.0;
    d.design(r, 1) = (data.x[i] - x0) / d.scale;
    d.response[r] = data.y[i];
    d.kernel[r] = scaled_kernel(kernel, data.x[i] - x0, h);
  }
  return d;
}

LocalDesign vc_design(const VCDataset& data, double u0, double h, const KernelSpec& kernel) {
  const LocalProblem prob = make_vc_local_problem(data, u0, Bandwidths{h, 1.0}, kernel);
  return LocalDesign{prob.design, prob.response, prob.kernel};
}

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double mad_scale(const Eigen::VectorXd& r) {
  std::vector<double> v(r.data(), r.data() + r.size());
  const double med = median_of(v);
  for (double& e : v) e = std::abs(e - med);
  return median_of(std::move(v)) / 0.6744897501960817;
}

struct RobustResult {
  Eigen::VectorXd theta;
  int iterations = 0;
  bool converged = true;
};

RobustResult robust_fit(const LocalDesign& d, Method method, double huber_c) {
  if (d.design.rows() == 0)
    fail(ErrorCode::DegenerateWindow, "no observation inside the kernel window");
  RobustResult out;
  out.theta = weighted_least_squares(d.design, d.response, d.kernel);
  if (method == Method::LL) return out;

  out.converged = false;
  Eigen::VectorXd w(d.kernel.size());
  for (int it = 0; it < kRobustMaxIter; ++it) {
    const Eigen::VectorXd r = d.response - d.design * out.theta;
    if (method == Method::LM) {
      const double s = mad_scale(r);
      if (!(s > 0.0)) {
        out.converged = true;
        break;
      }
      const double cut = huber_c * s;
      for (Eigen::Index i = 0; i < r.size(); ++i)
        w[i] = d.kernel[i] * (std::abs(r[i]) <= cut ? 1.0 : cut / std::abs(r[i]));
    } else {
      for (Eigen::Index i = 0; i < r.size(); ++i)
        w[i] = d.kernel[i] / std::sqrt(r[i] * r[i] + kMedianSmoothing * kMedianSmoothing);
    }
    const Eigen::VectorXd next = weighted_least_squares(d.design, d.response, w);
    const double step = (next - out.theta).cwiseAbs().maxCoeff();
    const double size = out.theta.cwiseAbs().maxCoeff();
    out.theta = next;
    out.iterations = it + 1;
    if (step <= kRobustTol * (1.0 + size)) {
      out.converged = true;
      break;
    }
  }
  return out;
}

BaselineEstimate scalar_estimate(const Dataset& data, double x0, double h, Method method,
                                 double c, const KernelSpec& kernel) {
  require(std::isfinite(h) && h > 0.0, "baseline bandwidth must be positive");
  const LocalDesign d = scalar_design(data, x0, h, kernel);
  const RobustResult r = robust_fit(d, method, c);
  BaselineEstimate e;
  e.value = r.theta[0];
  e.coefficients = {r.theta[0], r.theta[1] / d.scale};
  e.iterations = r.iterations;
  e.converged = r.converged;
  return e;
}

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> log_grid(double range) {
  std::vector<double> g(kCvGridSize);
  const double lo = std::log(0.05 * range);
  const double hi = std::log(1.0 * range);
  for (int k = 0; k < kCvGridSize; ++k)
    g[k] = std::exp(lo + (hi - lo) * k / (kCvGridSize - 1));
  return g;
}

double loss(Method method, double err) {
  return method == Method::LMD ? std::abs(err) : err * err;
}

double pick_best(const CvResult& r) {
  double best_score = std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < r.scores.size(); ++k)
    if (std::isfinite(r.scores[k]) && r.scores[k] < best_score) {
      best_score = r.scores[k];
      best = r.bandwidths[k];
    }
  if (!std::isfinite(best))
    fail(ErrorCode::AllFitsFailed, "every cross-validation candidate failed on some fold");
  return best;
}

}  // namespace

Method parse_method(std::string_view name) {
  if (name == "ll") return Method::LL;
  if (name == "lm") return Method::LM;
  if (name == "lmd") return Method::LMD;
  if (name == "llmr") return Method::LLMR;
  fail(ErrorCode::MethodError, "unknown method '" + std::string(name) + "' (expected ll|lm|lmd|llmr)");
}

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::LL: return "ll";
    case Method::LM: return "lm";
    case Method::LMD: return "lmd";
    case Method::LLMR: return "llmr";
  }
  return "?";
}

void BaselineSpec::validate() const {
  require(method != Method::LLMR, "LLMR is not a baseline method");
  require(std::isfinite(h) && h > 0.0, "baseline bandwidth must be positive");
  if (method == Method::LM) require(huber_c > 0.0, "Huber constant must be positive");
}

BaselineEstimate local_linear_mean(const Dataset& data, double x0, double h,
                                   const KernelSpec& kernel) {
  return scalar_estimate(data, x0, h, Method::LL, 0.0, kernel);
}

BaselineEstimate local_median(const Dataset& data, double x0, double h, const KernelSpec& kernel) {
  return scalar_estimate(data, x0, h, Method::LMD, 0.0, kernel);
}

BaselineEstimate local_m_huber(const Dataset& data, double x0, double h, double c,
                               const KernelSpec& kernel) {
  require(c > 0.0, "Huber constant must be positive");
  return scalar_estimate(data, x0, h, Method::LM, c, kernel);
}

BaselineEstimate baseline_fit(const Dataset& data, double x0, const BaselineSpec& spec) {
  spec.validate();
  return scalar_estimate(data, x0, spec.h, spec.method, spec.huber_c, spec.kernel);
}

BaselineEstimate vc_baseline_fit(const VCDataset& data, double u0, const BaselineSpec& spec) {
  spec.validate();
  const RobustResult r = robust_fit(vc_design(data, u0, spec.h, spec.kernel), spec.method,
                                    spec.huber_c);
  const Eigen::Index p = data.dims();
  BaselineEstimate e;
  e.coefficients.assign(r.theta.data(), r.theta.data() + p);
  e.value = e.coefficients[0];
  e.iterations = r.iterations;
  e.converged = r.converged;
  return e;
}

int row_fold(std::span<const double> row, int folds) noexcept {
  std::uint64_t h = 0x2545f4914f6cdd1dULL;
  for (double v : row) h = mix64(h ^ std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v));
  return static_cast<int>(h % static_cast<std::uint64_t>(folds));
}

CvResult cv_bandwidth_scores(const Dataset& data, Method method, int folds,
                             const KernelSpec& kernel) {
  require(folds >= 2, "cross-validation needs at least two folds");
  require(method != Method::LLMR, "cv_bandwidth applies to the baseline methods");
  const auto [lo, hi] = std::minmax_element(data.x.begin(), data.x.end());
  require(*hi > *lo, "predictor has zero range");

  std::vector<int> fold(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double row[2] = {data.x[i], data.y[i]};
    fold[i] = row_fold(row, folds);
  }
  std::vector<Dataset> train(folds);
  for (int f = 0; f < folds; ++f)
    for (std::size_t i = 0; i < data.size(); ++i)
      if (fold[i] != f) {
        train[f].x.push_back(data.x[i]);
        train[f].y.push_back(data.y[i]);
      }

  CvResult res;
  res.bandwidths = log_grid(*hi - *lo);
  for (double h : res.bandwidths) {
    double total = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < data.size() && ok; ++i) {
      if (train[fold[i]].size() == 0) {
        ok = false;
        break;
      }
      try {
        const double pred =
            scalar_estimate(train[fold[i]], data.x[i], h, method, 1.345, kernel).value;
        total += loss(method, data.y[i] - pred);
      } catch (const Error&) {
        ok = false;
      }
    }
    res.scores.push_back(ok ? total / static_cast<double>(data.size())
                            : std::numeric_limits<double>::quiet_NaN());
  }
  res.best = pick_best(res);
  return res;
}

double cv_bandwidth(const Dataset& data, Method method, int folds, const KernelSpec& kernel) {
  return cv_bandwidth_scores(data, method, folds, kernel).best;
}

CvResult vc_cv_bandwidth_scores(const VCDataset& data, Method method, int folds,
                                const KernelSpec& kernel) {
  require(folds >= 2, "cross-validation needs at least two folds");
  require(method != Method::LLMR, "cv_bandwidth applies to the baseline methods");
  const auto [lo, hi] = std::minmax_element(data.u.begin(), data.u.end());
  require(*hi > *lo, "index variable has zero range");
  const Eigen::Index p = data.dims();

  std::vector<int> fold(data.size());
  std::vector<double> row(p + 2);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    row[0] = data.u[i];
    for (Eigen::Index j = 0; j < p; ++j) row[j + 1] = data.X(r, j);
    row[p + 1] = data.y[i];
    fold[i] = row_fold(row, folds);
  }
  std::vector<VCDataset> train;
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (fold[i] != f) keep.push_back(static_cast<Eigen::Index>(i));
    VCDataset t;
    t.X.resize(static_cast<Eigen::Index>(keep.size()), p);
    for (std::size_t r = 0; r < keep.size(); ++r) {
      t.u.push_back(data.u[keep[r]]);
      t.y.push_back(data.y[keep[r]]);
      t.X.row(static_cast<Eigen::Index>(r)) = data.X.row(keep[r]);
    }
    train.push_back(std::move(t));
  }

  CvResult res;
  res.bandwidths = log_grid(*hi - *lo);
  for (double h : res.bandwidths) {
    BaselineSpec spec{method, h, 1.345, kernel};
    double total = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < data.size() && ok; ++i) {
      try {
        const auto g = vc_baseline_fit(train[fold[i]], data.u[i], spec).coefficients;
        double pred = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) pred += g[j] * data.X(static_cast<Eigen::Index>(i), j);
        total += loss(method, data.y[i] - pred);
      } catch (const Error&) {
        ok = false;
      }
    }
    res.scores.push_back(ok ? total / static_cast<double>(data.size())
                            : std::numeric_limits<double>::quiet_NaN());
  }
  res.best = pick_best(res);
  return res;
}

double vc_cv_bandwidth(const VCDataset& data, Method method, int folds, const KernelSpec& kernel) {
  return vc_cv_bandwidth_scores(data, method, folds, kernel).best;
}

}  // namespace modalreg
