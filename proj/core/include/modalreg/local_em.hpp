#pragma once

#include <Eigen/Dense>
#include <vector>

namespace modalreg {

// A localized modal objective
//
//   sum_i k_i * phi_h(y_i - d_i^T theta),
//
// restricted to the rows with k_i > 0. Scalar local polynomial fits,
// varying-coefficient fits and the cubic pilot all reduce to this form and
// share one EM implementation, so their arithmetic is identical whenever
// their designs coincide.
struct LocalProblem {
  Eigen::MatrixXd design;    // one row per active observation
  Eigen::VectorXd response;
  Eigen::VectorXd kernel;    // k_i > 0
  double h2 = 1.0;

  Eigen::Index rows() const { return design.rows(); }
  Eigen::Index cols() const { return design.cols(); }
};

struct EmSettings {
  int max_iter = 500;
  double tol_obj = 1e-8;
  double tol_param = 1e-6;
};

struct EmRun {
  Eigen::VectorXd theta;
  double objective = 0.0;  // sum_i k_i phi_h(r_i), not normalized by n
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after each iteration, when requested
};

struct MultiStartRun {
  EmRun best;
  Eigen::VectorXd initial;  // start 1 (kernel-weighted least squares)
  std::vector<double> start_objectives;  // -inf for starts that failed
  int starts_used = 0;
};

double local_objective(const LocalProblem& problem, const Eigen::VectorXd& theta);

// Normalized E-step responsibilities, computed in the log domain so large
// residuals never underflow the normalization.
Eigen::VectorXd local_responsibilities(const LocalProblem& problem,
                                       const Eigen::VectorXd& theta);

// Solves (D^T W D) b = D^T W y. The system is ridge-stabilized by
// 1e-10 * trace / q on the diagonal and then refined once against the exact
// normal equations. Throws SingularDesign when the unregularized matrix has
// condition number above 1e12.
Eigen::VectorXd weighted_least_squares(const Eigen::MatrixXd& design,
                                       const Eigen::VectorXd& response,
                                       const Eigen::VectorXd& weights);

EmRun run_modal_em(const LocalProblem& problem, Eigen::VectorXd start,
                   const EmSettings& settings, bool record_trace = false);

// Start 1 is the kernel-weighted least-squares fit; further starts shift the
// intercept coordinate (column 0) by quantiles of start 1's residuals. When
// n_starts > 1 one more start is the best of 41 intercept shifts at the
// residual quantiles (k + 1/2) / 41, scored by the objective. The best final
// objective wins; ties within 1e-10 go to the start whose
// intercept stays closest to start 1.
MultiStartRun multi_start_em(const LocalProblem& problem, const EmSettings& settings,
                             int n_starts);

// Residual quantile levels used for starts 2..n_starts.
std::vector<double> start_quantile_levels(int n_starts);

// Type-7 (linear interpolation) sample quantile.
double sample_quantile(std::vector<double> values, double level);

}  // namespace modalreg
