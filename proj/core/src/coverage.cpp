#include "modalreg/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>

#include "modalreg/bandwidth.hpp"
#include "modalreg/format.hpp"
#include "modalreg/parallel.hpp"

namespace modalreg {

double coverage_probability(double center, double width, double location, double scale,
                            const ErrorMixture& error) {
  require(width >= 0.0, "interval width must be nonnegative");
  require(scale > 0.0, "scale must be positive");
  if (width == 0.0) return 0.0;
  if (std::isinf(width)) return 1.0;
  const double hi = (center + 0.5 * width - location) / scale;
  const double lo = (center - 0.5 * width - location) / scale;
  return std::clamp(error.cdf(hi) - error.cdf(lo), 0.0, 1.0);
}

double coverage_probability(double center, double width, double x, const Scenario& scenario) {
  return coverage_probability(center, width, scenario.location(x), scenario.scale(x), scenario.error);
}

double coverage_probability(double center, double width, double u, double x1, double x2,
                            const Scenario& scenario) {
  const auto g = scenario.coefficients(u);
  return coverage_probability(center, width, g[0] + g[1] * x1 + g[2] * x2, scenario.scale(u),
                              scenario.error);
}

std::vector<double> linspace(double a, double b, int k) {
  require(k >= 1, "grid size must be positive");
  if (k == 1) return {a};
  std::vector<double> g(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) g[i] = a + (b - a) * i / (k - 1);
  return g;
}

void CoverageStudyConfig::validate() const {
  require(!methods.empty(), "at least one method is required");
  require(n >= 20, "coverage studies need n >= 20");
  require(replications >= 1, "replications must be positive");
  require(!widths.empty(), "at least one width is required");
  for (double w : widths) require(w >= 0.0, "widths must be nonnegative");
  require(sigma > 0.0, "sigma must be positive");
  require(grid_size >= 1 && vc_grid_size >= 1, "grid sizes must be positive");
  require(cv_folds >= 2, "cv folds must be at least 2");
  require(threads >= 1, "threads must be positive");
  if (llmr_bandwidths) llmr_bandwidths->validate();
  em.validate();
}

namespace {

struct RepOutcome {
  std::vector<double> coverage;  // per width
  bool ok = false;
  std::string message;
};

// Mean coverage over the prediction grid for every width.
std::vector<double> scalar_coverage(const CoverageStudyConfig& cfg, std::span<const double> grid,
                                    std::span<const double> centers) {
  std::vector<double> out(cfg.widths.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double loc = cfg.scenario.location(grid[k]);
    const double sc = cfg.scenario.scale(grid[k]);
    for (std::size_t w = 0; w < cfg.widths.size(); ++w)
      out[w] += coverage_probability(centers[k], 2.0 * cfg.widths[w] * cfg.sigma, loc, sc, cfg.scenario.error);
  }
  for (double& v : out) v /= static_cast<double>(grid.size());
  return out;
}

// Coverage over the tensor grid u x x1 x x2 given coefficient estimates at each u.
std::vector<double> vc_coverage(const CoverageStudyConfig& cfg, std::span<const double> grid,
                                const std::vector<std::vector<double>>& coef) {
  std::vector<double> out(cfg.widths.size(), 0.0);
  for (std::size_t a = 0; a < grid.size(); ++a) {
    const auto g = cfg.scenario.coefficients(grid[a]);
    const double sc = cfg.scenario.scale(grid[a]);
    for (double x1 : grid)
      for (double x2 : grid) {
        const double center = coef[a][0] + coef[a][1] * x1 + coef[a][2] * x2;
        const double loc = g[0] + g[1] * x1 + g[2] * x2;
        for (std::size_t w = 0; w < cfg.widths.size(); ++w)
          out[w] += coverage_probability(center, 2.0 * cfg.widths[w] * cfg.sigma, loc, sc, cfg.scenario.error);
      }
  }
  const double cells = std::pow(static_cast<double>(grid.size()), 3);
  for (double& v : out) v /= cells;
  return out;
}

double median_of(std::vector<double> v) { return sample_quantile(std::move(v), 0.5); }

}  // namespace

std::vector<CoverageReport> run_coverage_study(const CoverageStudyConfig& cfg) {
  cfg.validate();
  const bool vc = cfg.scenario.varying_coefficient();
  const auto reps = static_cast<std::size_t>(cfg.replications);
  const std::vector<double> grid =
      vc ? linspace(0.1, 0.9, cfg.vc_grid_size) : linspace(0.1, 0.9, cfg.grid_size);
  const auto log = [&](const std::string& msg) {
    if (cfg.log) cfg.log(msg);
  };

  std::vector<ScalarSample> scalar(vc ? 0 : reps);
  std::vector<VCSample> vcs(vc ? reps : 0);
  parallel_for(reps, cfg.threads, [&](std::size_t r) {
    if (vc)
      vcs[r] = generate_vc(cfg.scenario, cfg.n, cfg.seed, r);
    else
      scalar[r] = generate_scalar(cfg.scenario, cfg.n, cfg.seed, r);
  });

  const bool wants_llmr =
      std::find(cfg.methods.begin(), cfg.methods.end(), Method::LLMR) != cfg.methods.end();
  std::vector<std::optional<Bandwidths>> plugin(reps);
  Bandwidths fallback{};
  int fallbacks = 0;
  if (wants_llmr && cfg.llmr_bandwidths) {
    std::fill(plugin.begin(), plugin.end(), cfg.llmr_bandwidths);
  } else if (wants_llmr) {
    parallel_for(reps, cfg.threads, [&](std::size_t r) {
      try {
        plugin[r] = vc ? select_vc_plugin_bandwidths(vcs[r].data, cfg.em.kernel, cfg.em).bandwidths
                       : select_plugin_bandwidths(scalar[r].data, cfg.em.kernel, cfg.em).bandwidths;
      } catch (const Error&) {
        plugin[r].reset();
      }
    });
    std::vector<double> h1s, h2s;
    for (const auto& b : plugin)
      if (b) {
        h1s.push_back(b->h1);
        h2s.push_back(b->h2);
      }
    fallbacks = static_cast<int>(reps - h1s.size());
    if (!h1s.empty()) fallback = Bandwidths{median_of(h1s), median_of(h2s)};
    for (std::size_t r = 0; r < reps; ++r)
      if (!plugin[r]) {
        log("replication " + std::to_string(r) + ": plug-in failed, using median plug-in bandwidths");
        if (!h1s.empty()) plugin[r] = fallback;
      }
  }

  std::vector<CoverageReport> reports;
  for (Method method : cfg.methods) {
    std::vector<RepOutcome> outcomes(reps);
    parallel_for(reps, cfg.threads, [&](std::size_t r) {
      RepOutcome& out = outcomes[r];
      try {
        if (method == Method::LLMR && !plugin[r])
          fail(ErrorCode::InvalidPlugin, "no plug-in bandwidths available");
        if (!vc) {
          const Dataset& data = scalar[r].data;
          std::vector<double> centers(grid.size());
          if (method == Method::LLMR) {
            const CurveEstimate est = fit_curve(data, grid, *plugin[r], cfg.em);
            if (est.failures() > 0)
              fail(*std::find_if(est.fits.begin(), est.fits.end(),
                                 [](const PointFit& f) { return !f.ok(); })->failure,
                   "grid fit failed");
            centers = est.values();
          } else {
            BaselineSpec spec{method, cv_bandwidth(data, method, cfg.cv_folds, cfg.em.kernel)};
            spec.kernel = cfg.em.kernel;
            for (std::size_t k = 0; k < grid.size(); ++k) centers[k] = baseline_fit(data, grid[k], spec).value;
          }
          out.coverage = scalar_coverage(cfg, grid, centers);
        } else {
          const VCDataset& data = vcs[r].data;
          std::vector<std::vector<double>> coef(grid.size());
          if (method == Method::LLMR) {
            const VCCurveEstimate est = vc_fit_curves(data, grid, *plugin[r], cfg.em);
            for (std::size_t k = 0; k < grid.size(); ++k) {
              if (!est.fits[k].ok()) fail(*est.fits[k].failure, est.fits[k].failure_message);
              coef[k] = est.fits[k].coefficients.b;
            }
          } else {
            BaselineSpec spec{method, vc_cv_bandwidth(data, method, cfg.cv_folds, cfg.em.kernel)};
            spec.kernel = cfg.em.kernel;
            for (std::size_t k = 0; k < grid.size(); ++k)
              coef[k] = vc_baseline_fit(data, grid[k], spec).coefficients;
          }
          out.coverage = vc_coverage(cfg, grid, coef);
        }
        out.ok = true;
      } catch (const Error& e) {
        out.ok = false;
        out.message = e.what();
      }
    });

    int failures = 0;
    for (std::size_t r = 0; r < reps; ++r)
      if (!outcomes[r].ok) {
        ++failures;
        log(std::string(method_name(method)) + " replication " + std::to_string(r) +
            " failed: " + outcomes[r].message);
      }
    if (failures > cfg.max_failure_fraction * static_cast<double>(reps))
      fail(ErrorCode::TooManyFailures, std::string(method_name(method)) + ": " +
                                           std::to_string(failures) + " of " + std::to_string(reps) +
                                           " replications failed");

    for (std::size_t w = 0; w < cfg.widths.size(); ++w) {
      double sum = 0.0, sum_sq = 0.0;
      int used = 0;
      for (const auto& o : outcomes)
        if (o.ok) {
          sum += o.coverage[w];
          ++used;
        }
      const double mean = sum / used;
      for (const auto& o : outcomes)
        if (o.ok) sum_sq += (o.coverage[w] - mean) * (o.coverage[w] - mean);
      CoverageReport rep;
      rep.method = method;
      rep.n = cfg.n;
      rep.width = cfg.widths[w];
      rep.mean_coverage = mean;
      rep.sd_coverage = used > 1 ? std::sqrt(sum_sq / (used - 1)) : 0.0;
      rep.replications = used;
      rep.failures = failures;
      rep.plugin_fallbacks = method == Method::LLMR ? fallbacks : 0;
      reports.push_back(rep);
    }
  }
  return reports;
}

void write_coverage_csv(std::ostream& out, const std::vector<CoverageReport>& rows) {
  out << "method,n,width,mean_coverage,sd_coverage,replications,failures,plugin_fallbacks\n";
  for (const auto& r : rows)
    out << method_name(r.method) << ',' << r.n << ',' << format_number(r.width) << ','
        << format_number(r.mean_coverage) << ',' << format_number(r.sd_coverage) << ','
        << r.replications << ',' << r.failures << ',' << r.plugin_fallbacks << '\n';
}

}  // namespace modalreg
