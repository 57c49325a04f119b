#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "modalreg/baselines.hpp"

namespace modalreg {

enum class CvScheme { KFold, MonteCarlo };

struct CvMspeConfig {
  Method method = Method::LLMR;
  CvScheme scheme = CvScheme::KFold;
  int d = 5;           // folds, or 1/d of the sample held out per Monte-Carlo split
  int mc_splits = 50;  // Monte-Carlo splits
  std::uint64_t seed = 0;
  int threads = 1;
  // Fixed bandwidths; when absent LLMR uses the plug-in and the baselines
  // cross-validate on each training part.
  std::optional<Bandwidths> llmr_bandwidths;
  std::optional<double> baseline_bandwidth;
  int inner_folds = 5;
  EMConfig em{};

  void validate() const;
};

struct CvMspeResult {
  double median = 0.0;  // median over splits of the per-split MSPE
  double sd = 0.0;
  std::vector<double> split_mspe;  // NaN for failed splits
  int splits = 0;
  int failures = 0;
};

// MSPE of a split is the median of squared prediction errors on its test part.
CvMspeResult cv_mspe(const Dataset& data, const CvMspeConfig& cfg);

// Test-set membership for every split, from a seeded permutation.
std::vector<std::vector<std::size_t>> cv_splits(std::size_t n, const CvMspeConfig& cfg);

}  // namespace modalreg
