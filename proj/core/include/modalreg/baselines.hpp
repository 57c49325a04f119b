#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "modalreg/modal_lpr.hpp"
#include "modalreg/varying_coeff.hpp"

namespace modalreg {

// Estimators compared in the coverage studies. The CLI spells them
// ll | lm | lmd | llmr.
enum class Method { LL, LM, LMD, LLMR };

Method parse_method(std::string_view name);  // throws MethodError
std::string_view method_name(Method m) noexcept;

// LM uses the Huber loss (c = 1.345 by default) with a MAD scale that is
// re-estimated every iteration.
struct BaselineSpec {
  Method method = Method::LL;
  double h = 0.0;
  double huber_c = 1.345;
  KernelSpec kernel{};

  void validate() const;
};

struct BaselineEstimate {
  double value = 0.0;               // intercept at the evaluation point
  std::vector<double> coefficients;  // local linear coefficients, original scale
  int iterations = 0;
  bool converged = true;
};

// Kernel-weighted least-squares line at x0.
BaselineEstimate local_linear_mean(const Dataset& data, double x0, double h,
                                   const KernelSpec& kernel = {});

// Local linear median: IRLS on sqrt(r^2 + 1e-12), at most 200 iterations.
BaselineEstimate local_median(const Dataset& data, double x0, double h,
                              const KernelSpec& kernel = {});

// Local linear Huber M-estimate.
BaselineEstimate local_m_huber(const Dataset& data, double x0, double h, double c = 1.345,
                               const KernelSpec& kernel = {});

BaselineEstimate baseline_fit(const Dataset& data, double x0, const BaselineSpec& spec);

// Local-linear-in-u fit of the varying-coefficient design; `coefficients`
// holds g(u0) (length p) and `value` is g_1(u0).
BaselineEstimate vc_baseline_fit(const VCDataset& data, double u0, const BaselineSpec& spec);

struct CvResult {
  std::vector<double> bandwidths;
  std::vector<double> scores;  // NaN when a candidate failed on some fold
  double best = 0.0;
};

// 20 log-spaced candidates from 0.05 to 1.0 times the predictor range;
// squared error for LL and LM, absolute error for LMD. Fold membership is a
// hash of the row values, so duplicated rows always share a fold.
CvResult cv_bandwidth_scores(const Dataset& data, Method method, int folds = 5,
                             const KernelSpec& kernel = {});
double cv_bandwidth(const Dataset& data, Method method, int folds = 5,
                    const KernelSpec& kernel = {});

CvResult vc_cv_bandwidth_scores(const VCDataset& data, Method method, int folds = 5,
                                const KernelSpec& kernel = {});
double vc_cv_bandwidth(const VCDataset& data, Method method, int folds = 5,
                       const KernelSpec& kernel = {});

// Fold index in [0, folds) for a row; depends only on the row's values.
int row_fold(std::span<const double> row, int folds) noexcept;

}  // namespace modalreg
