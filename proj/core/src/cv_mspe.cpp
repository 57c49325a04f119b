#include "modalreg/cv_mspe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "modalreg/bandwidth.hpp"
#include "modalreg/parallel.hpp"
#include "modalreg/rng.hpp"

namespace modalreg {

void CvMspeConfig::validate() const {
  require(d >= 2, "d must be at least 2");
  require(mc_splits >= 1, "Monte-Carlo splits must be positive");
  require(threads >= 1, "threads must be positive");
  require(inner_folds >= 2, "inner folds must be at least 2");
  if (llmr_bandwidths) llmr_bandwidths->validate();
  if (baseline_bandwidth) require(*baseline_bandwidth > 0.0, "baseline bandwidth must be positive");
  em.validate();
}

namespace {

std::vector<std::size_t> permutation(std::size_t n, Philox4x32& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
  }
  return idx;
}

}  // namespace

std::vector<std::vector<std::size_t>> cv_splits(std::size_t n, const CvMspeConfig& cfg) {
  const auto d = static_cast<std::size_t>(cfg.d);
  cfg.validate();
  require(n >= d, "need at least d observations");
  std::vector<std::vector<std::size_t>> splits;
  if (cfg.scheme == CvScheme::KFold) {
    Philox4x32 rng(cfg.seed, 0);
    const auto perm = permutation(n, rng);
    splits.resize(d);
    for (std::size_t k = 0; k < n; ++k) splits[k % d].push_back(perm[k]);
  } else {
    const std::size_t test = std::max<std::size_t>(1, n / d);
    for (int s = 0; s < cfg.mc_splits; ++s) {
      Philox4x32 rng(cfg.seed, static_cast<std::uint64_t>(s));
      auto perm = permutation(n, rng);
      perm.resize(test);
      splits.push_back(std::move(perm));
    }
  }
  for (auto& s : splits) std::sort(s.begin(), s.end());
  return splits;
}

CvMspeResult cv_mspe(const Dataset& data, const CvMspeConfig& cfg) {
  cfg.validate();
  const auto splits = cv_splits(data.size(), cfg);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CvMspeResult res;
  res.splits = static_cast<int>(splits.size());
  res.split_mspe.assign(splits.size(), nan);

  parallel_for(splits.size(), cfg.threads, [&](std::size_t s) {
    const auto& test = splits[s];
    std::vector<char> held(data.size(), 0);
    for (std::size_t i : test) held[i] = 1;
    std::vector<double> tx, ty;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (!held[i]) {
        tx.push_back(data.x[i]);
        ty.push_back(data.y[i]);
      }
    try {
      const Dataset train(std::move(tx), std::move(ty));
      std::vector<double> sq;
      if (cfg.method == Method::LLMR) {
        const Bandwidths bw = cfg.llmr_bandwidths
                                  ? *cfg.llmr_bandwidths
                                  : select_plugin_bandwidths(train, cfg.em.kernel, cfg.em).bandwidths;
        for (std::size_t i : test) {
          try {
            const double pred = fit_point(train, data.x[i], bw, cfg.em).coefficients.beta[0];
            sq.push_back((data.y[i] - pred) * (data.y[i] - pred));
          } catch (const Error&) {
          }
        }
      } else {
        BaselineSpec spec{cfg.method,
                          cfg.baseline_bandwidth
                              ? *cfg.baseline_bandwidth
                              : cv_bandwidth(train, cfg.method, cfg.inner_folds, cfg.em.kernel)};
        spec.kernel = cfg.em.kernel;
        for (std::size_t i : test) {
          try {
            const double pred = baseline_fit(train, data.x[i], spec).value;
            sq.push_back((data.y[i] - pred) * (data.y[i] - pred));
          } catch (const Error&) {
          }
        }
      }
      if (!sq.empty()) res.split_mspe[s] = sample_quantile(std::move(sq), 0.5);
    } catch (const Error&) {
    }
  });

  std::vector<double> ok;
  for (double v : res.split_mspe)
    if (std::isfinite(v)) ok.push_back(v);
  res.failures = res.splits - static_cast<int>(ok.size());
  if (ok.empty()) fail(ErrorCode::AllFitsFailed, "every cross-validation split failed");
  res.median = sample_quantile(ok, 0.5);
  if (ok.size() > 1) {
    const double mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
    double ss = 0.0;
    for (double v : ok) ss += (v - mean) * (v - mean);
    res.sd = std::sqrt(ss / static_cast<double>(ok.size() - 1));
  }
  return res;
}

}  // namespace modalreg
