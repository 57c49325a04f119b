#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "modalreg/baselines.hpp"

namespace modalreg::cli {

enum class BandwidthMode { Plugin, Manual, CV };

struct GridSpec {
  double a = 0.0;
  double b = 0.0;
  int k = 0;
};
// "a:b:k" with k >= 1.
GridSpec parse_grid(const std::string& text);

struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string output;  // empty: stdout, no config echo
  std::string method = "llmr";
  std::vector<std::string> methods{"ll", "lm", "lmd", "llmr"};
  // Defaults to plugin for llmr and cv for the baselines.
  std::optional<BandwidthMode> bandwidth;
  std::optional<double> h1;
  std::optional<double> h2;
  std::string kernel = "epanechnikov";
  std::optional<std::string> grid;
  int order = 1;
  std::optional<std::uint64_t> seed;
  int reps = 100;
  std::vector<double> widths{0.1, 0.2, 0.5};
  int threads = 1;
  std::string scenario = "example1";
  std::size_t n = 200;
  int grid_size = 200;
  double x0 = 0.5;
  std::string scheme = "kfold";
  int folds = 5;
  int splits = 50;
  int max_iter = 500;
  int starts = 5;
};

// Runs one subcommand. Returns the process exit status: 0 success, 1 invalid
// input or configuration, 2 numerical failure.
int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Parses argv and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace modalreg::cli
