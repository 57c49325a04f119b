#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "modalreg/baselines.hpp"
#include "modalreg/scenarios.hpp"

namespace modalreg {

// P(|y - center| <= width/2) when y = location + scale * eps.
double coverage_probability(double center, double width, double location, double scale,
                            const ErrorMixture& error);
// Scalar scenario at predictor value x.
double coverage_probability(double center, double width, double x, const Scenario& scenario);
// Varying-coefficient scenario at (u, x1, x2).
double coverage_probability(double center, double width, double u, double x1, double x2,
                            const Scenario& scenario);

struct CoverageStudyConfig {
  Scenario scenario = example1();
  std::vector<Method> methods{Method::LL, Method::LM, Method::LMD, Method::LLMR};
  std::size_t n = 200;
  int replications = 100;
  // Interval half-lengths in multiples of sigma: the interval for width w
  // is center +- w * sigma.
  std::vector<double> widths{0.1, 0.2, 0.5};
  double sigma = 2.0;
  int grid_size = 200;    // scalar grid on [0.1, 0.9]
  int vc_grid_size = 30;  // per axis for u, x1, x2
  int cv_folds = 5;
  std::uint64_t seed = 0;
  int threads = 1;
  double max_failure_fraction = 0.1;
  EMConfig em{};
  // Fixed LLMR bandwidths instead of the per-replication plug-in.
  std::optional<Bandwidths> llmr_bandwidths;
  std::function<void(const std::string&)> log;

  void validate() const;
};

struct CoverageReport {
  Method method = Method::LLMR;
  std::size_t n = 0;
  double width = 0.0;  // in sigma units
  double mean_coverage = 0.0;
  double sd_coverage = 0.0;
  int replications = 0;  // replications that entered the average
  int failures = 0;
  int plugin_fallbacks = 0;
};

// One fresh sample per replication (stream = replication index); LLMR uses
// plug-in bandwidths, the baselines cross-validated ones. Throws
// TooManyFailures when more than max_failure_fraction of a method's
// replications fail.
std::vector<CoverageReport> run_coverage_study(const CoverageStudyConfig& cfg);

void write_coverage_csv(std::ostream& out, const std::vector<CoverageReport>& rows);

// Evenly spaced points a, ..., b (k >= 2) or {a} when k == 1.
std::vector<double> linspace(double a, double b, int k);

}  // namespace modalreg
