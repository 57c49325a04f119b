#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <sstream>

#include "dataset_io.hpp"
#include "modalreg/bandwidth.hpp"
#include "modalreg/coverage.hpp"
#include "modalreg/cv_mspe.hpp"
#include "modalreg/format.hpp"
#include "modalreg/theory.hpp"

namespace modalreg::cli {
namespace {

using nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string mode_name(BandwidthMode m) {
  switch (m) {
    case BandwidthMode::Plugin: return "plugin";
    case BandwidthMode::Manual: return "manual";
    case BandwidthMode::CV: return "cv";
  }
  return "plugin";
}

BandwidthMode resolved_mode(const RunConfig& cfg, Method method) {
  if (cfg.bandwidth) return *cfg.bandwidth;
  return method == Method::LLMR ? BandwidthMode::Plugin : BandwidthMode::CV;
}

json config_json(const RunConfig& cfg) {
  json j;
  j["subcommand"] = cfg.subcommand;
  j["input"] = cfg.input;
  j["output"] = cfg.output;
  j["method"] = cfg.method;
  j["methods"] = cfg.methods;
  j["bandwidth"] = cfg.bandwidth ? json(mode_name(*cfg.bandwidth)) : json(nullptr);
  j["h1"] = cfg.h1 ? json(*cfg.h1) : json(nullptr);
  j["h2"] = cfg.h2 ? json(*cfg.h2) : json(nullptr);
  j["kernel"] = cfg.kernel;
  j["grid"] = cfg.grid ? json(*cfg.grid) : json(nullptr);
  j["order"] = cfg.order;
  j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  j["reps"] = cfg.reps;
  j["widths"] = cfg.widths;
  j["threads"] = cfg.threads;
  j["scenario"] = cfg.scenario;
  j["n"] = cfg.n;
  j["grid_size"] = cfg.grid_size;
  j["x0"] = cfg.x0;
  j["scheme"] = cfg.scheme;
  j["folds"] = cfg.folds;
  j["splits"] = cfg.splits;
  j["max_iter"] = cfg.max_iter;
  j["starts"] = cfg.starts;
  return j;
}

// Result text goes to the output file (plus a JSON config echo next to it)
// or to `out` when no output path is given.
void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.output, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot write '" + cfg.output + "'");
  f << text;
  std::ofstream echo(cfg.output + ".config.json", std::ios::binary);
  if (!echo) fail(ErrorCode::IoError, "cannot write '" + cfg.output + ".config.json'");
  echo << config_json(cfg).dump(2) << '\n';
}

EMConfig em_config(const RunConfig& cfg) {
  EMConfig em;
  em.order = cfg.order;
  em.kernel = KernelSpec{parse_kernel_family(cfg.kernel)};
  em.max_iter = cfg.max_iter;
  em.n_starts = cfg.starts;
  if (cfg.seed) em.seed = *cfg.seed;
  em.validate();
  return em;
}

std::uint64_t required_seed(const RunConfig& cfg) {
  if (!cfg.seed) fail(ErrorCode::InvalidArgument, cfg.subcommand + " requires --seed");
  return *cfg.seed;
}

Bandwidths manual_bandwidths(const RunConfig& cfg) {
  if (!cfg.h1 || !cfg.h2) fail(ErrorCode::InvalidArgument, "manual bandwidths need --h1 and --h2");
  Bandwidths bw{*cfg.h1, *cfg.h2};
  bw.validate();
  return bw;
}

double manual_baseline_bandwidth(const RunConfig& cfg) {
  if (!cfg.h1) fail(ErrorCode::InvalidArgument, "manual baseline bandwidth needs --h1");
  require(*cfg.h1 > 0.0 && std::isfinite(*cfg.h1), "--h1 must be positive");
  return *cfg.h1;
}

std::vector<double> fit_grid(const RunConfig& cfg, std::span<const double> values, int default_k) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!cfg.grid) return linspace(*lo, *hi, default_k);
  const GridSpec g = parse_grid(*cfg.grid);
  if (std::min(g.a, g.b) < *lo || std::max(g.a, g.b) > *hi)
    fail(ErrorCode::OutOfRange, "grid " + *cfg.grid + " leaves the data range [" + format_number(*lo) + ", " +
                                    format_number(*hi) + "]");
  return linspace(g.a, g.b, g.k);
}

Scenario scenario_by_name(const std::string& name) {
  if (name == "example1") return example1();
  if (name == "vc1") return vc_model(1);
  if (name == "vc2") return vc_model(2);
  if (name == "linear") return homoscedastic_linear(1.0, 2.0, 1.0);
  if (name == "vc-linear") return homoscedastic_varying_coefficient(1.0);
  fail(ErrorCode::InvalidArgument, "unknown scenario '" + name + "' (example1, vc1, vc2, linear, vc-linear)");
}

void method_check_order(const RunConfig& cfg, Method m) {
  if (m != Method::LLMR && cfg.order != 1)
    fail(ErrorCode::InvalidArgument, "--order applies to llmr only; the baselines are local linear");
}

std::string run_fit(const RunConfig& cfg) {
  const Method method = parse_method(cfg.method);
  method_check_order(cfg, method);
  const Dataset data = parse_scalar_dataset_file(cfg.input);
  const EMConfig em = em_config(cfg);
  const std::vector<double> grid = fit_grid(cfg, data.x, 101);
  const BandwidthMode mode = resolved_mode(cfg, method);

  std::ostringstream os;
  os << "x,m_hat,converged,iterations,objective\n";
  if (method == Method::LLMR) {
    if (mode == BandwidthMode::CV) fail(ErrorCode::InvalidArgument, "llmr supports plugin or manual bandwidths");
    const Bandwidths bw = mode == BandwidthMode::Manual ? manual_bandwidths(cfg)
                                                        : select_plugin_bandwidths(data, em.kernel, em).bandwidths;
    const CurveEstimate est = fit_curve(data, grid, bw, em, 0, cfg.threads);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const PointFit& f = est.fits[k];
      os << format_number(grid[k]) << ',' << format_number(f.ok() ? f.coefficients.beta[0] : kNaN) << ','
         << (f.converged ? 1 : 0) << ',' << f.iterations << ',' << format_number(f.ok() ? f.objective : kNaN)
         << '\n';
    }
  } else {
    if (mode == BandwidthMode::Plugin) fail(ErrorCode::InvalidArgument, "baselines support cv or manual bandwidths");
    BaselineSpec spec{method, mode == BandwidthMode::Manual ? manual_baseline_bandwidth(cfg)
                                                            : cv_bandwidth(data, method, 5, em.kernel)};
    spec.kernel = em.kernel;
    for (double x0 : grid) {
      const BaselineEstimate e = baseline_fit(data, x0, spec);
      os << format_number(x0) << ',' << format_number(e.value) << ',' << (e.converged ? 1 : 0) << ','
         << e.iterations << ",nan\n";
    }
  }
  return os.str();
}

std::string run_vc_fit(const RunConfig& cfg) {
  const Method method = parse_method(cfg.method);
  method_check_order(cfg, method);
  if (cfg.order != 1) fail(ErrorCode::InvalidArgument, "varying-coefficient fits are local linear");
  const VCDataset data = parse_vc_dataset_file(cfg.input);
  const EMConfig em = em_config(cfg);
  const std::vector<double> grid = fit_grid(cfg, data.u, 31);
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  const int p = data.dims();
  const BandwidthMode mode = resolved_mode(cfg, method);

  std::ostringstream os;
  os << 'u';
  for (int j = 1; j <= p; ++j) os << ",b" << j;
  for (int j = 1; j <= p; ++j) os << ",c" << j;
  os << ",converged,iterations,objective\n";
  if (method == Method::LLMR) {
    if (mode == BandwidthMode::CV) fail(ErrorCode::InvalidArgument, "llmr supports plugin or manual bandwidths");
    const Bandwidths bw = mode == BandwidthMode::Manual
                              ? manual_bandwidths(cfg)
                              : select_vc_plugin_bandwidths(data, em.kernel, em).bandwidths;
    const VCCurveEstimate est = vc_fit_curves(data, sorted, bw, em, cfg.threads);
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      const VCPointFit& f = est.fits[k];
      os << format_number(sorted[k]);
      for (int j = 0; j < p; ++j) os << ',' << format_number(f.ok() ? f.coefficients.b[j] : kNaN);
      for (int j = 0; j < p; ++j) os << ',' << format_number(f.ok() ? f.coefficients.c[j] : kNaN);
      os << ',' << (f.converged ? 1 : 0) << ',' << f.iterations << ',' << format_number(f.ok() ? f.objective : kNaN)
         << '\n';
    }
  } else {
    if (mode == BandwidthMode::Plugin) fail(ErrorCode::InvalidArgument, "baselines support cv or manual bandwidths");
    BaselineSpec spec{method, mode == BandwidthMode::Manual ? manual_baseline_bandwidth(cfg)
                                                            : vc_cv_bandwidth(data, method, 5, em.kernel)};
    spec.kernel = em.kernel;
    for (double u0 : sorted) {
      const BaselineEstimate e = vc_baseline_fit(data, u0, spec);
      os << format_number(u0);
      for (int j = 0; j < p; ++j) os << ',' << format_number(e.coefficients[j]);
      for (int j = 0; j < p; ++j) os << ",nan";
      os << ',' << (e.converged ? 1 : 0) << ',' << e.iterations << ",nan\n";
    }
  }
  return os.str();
}

std::string run_bandwidth(const RunConfig& cfg) {
  const EMConfig em = em_config(cfg);
  const auto data = parse_dataset(cfg.input);
  PluginQuantities q;
  Bandwidths bw;
  if (const auto* d = std::get_if<Dataset>(&data)) {
    const PluginSelection s = select_plugin_bandwidths(*d, em.kernel, em);
    q = s.quantities;
    bw = s.bandwidths;
  } else {
    const VCPluginSelection s = select_vc_plugin_bandwidths(std::get<VCDataset>(data), em.kernel, em);
    q = s.quantities;
    bw = s.bandwidths;
  }
  json j{{"K", q.K}, {"M", q.M}, {"N", q.N}, {"L", q.L}, {"delta", q.delta}, {"h1", bw.h1}, {"h2", bw.h2}};
  return j.dump(2) + "\n";
}

std::string run_simulate(const RunConfig& cfg) {
  const std::uint64_t seed = required_seed(cfg);
  const Scenario sc = scenario_by_name(cfg.scenario);
  std::ostringstream os;
  if (sc.varying_coefficient())
    write_dataset(os, generate_vc(sc, cfg.n, seed).data);
  else
    write_dataset(os, generate_scalar(sc, cfg.n, seed).data);
  return os.str();
}

std::string run_coverage(const RunConfig& cfg, std::ostream& err) {
  CoverageStudyConfig c;
  c.seed = required_seed(cfg);
  c.scenario = scenario_by_name(cfg.scenario);
  c.methods.clear();
  for (const auto& m : cfg.methods) c.methods.push_back(parse_method(m));
  c.n = cfg.n;
  c.replications = cfg.reps;
  c.widths = cfg.widths;
  c.grid_size = cfg.grid_size;
  c.threads = cfg.threads;
  c.em = em_config(cfg);
  if (cfg.bandwidth == BandwidthMode::Manual) c.llmr_bandwidths = manual_bandwidths(cfg);
  c.log = [&err](const std::string& msg) { err << "note: " << msg << '\n'; };
  std::ostringstream os;
  write_coverage_csv(os, run_coverage_study(c));
  return os.str();
}

std::string run_theory_check(const RunConfig& cfg) {
  TheoryCheckConfig c;
  c.seed = required_seed(cfg);
  c.scenario = scenario_by_name(cfg.scenario);
  c.x0 = cfg.x0;
  c.bw = manual_bandwidths(cfg);
  c.n = cfg.n;
  c.replications = cfg.reps;
  c.threads = cfg.threads;
  c.em = em_config(cfg);
  std::ostringstream os;
  os << "quantity,empirical,theoretical,ratio\n";
  const auto row = [&](const std::string& name, double e, double t) {
    os << name << ',' << format_number(e) << ',' << format_number(t) << ',' << format_number(e / t) << '\n';
  };
  if (c.scenario.varying_coefficient()) {
    const VCTheoryCheckReport r = vc_theory_check(c);
    for (int j = 0; j < 3; ++j) {
      row("variance_b" + std::to_string(j + 1), r.empirical_covariance(j, j), r.theoretical_covariance(j, j));
      row("bias_b" + std::to_string(j + 1), r.empirical_bias[j], r.theoretical_bias[j]);
    }
    os << "replications," << r.replications << ",,\nfailures," << r.failures << ",,\n";
  } else {
    const TheoryCheckReport r = mc_theory_check(c);
    row("variance", r.empirical_variance, r.theoretical_variance);
    row("bias", r.empirical_bias, r.theoretical_bias);
    os << "ks_distance," << format_number(r.ks_distance) << ",,\n";
    os << "ks_distance_centered," << format_number(r.ks_distance_centered) << ",,\n";
    os << "replications," << r.replications << ",,\nfailures," << r.failures << ",,\n";
  }
  return os.str();
}

std::string run_cv(const RunConfig& cfg) {
  CvMspeConfig c;
  c.seed = required_seed(cfg);
  c.method = parse_method(cfg.method);
  method_check_order(cfg, c.method);
  if (cfg.scheme == "kfold")
    c.scheme = CvScheme::KFold;
  else if (cfg.scheme == "mccv")
    c.scheme = CvScheme::MonteCarlo;
  else
    fail(ErrorCode::InvalidArgument, "--scheme must be kfold or mccv");
  c.d = cfg.folds;
  c.mc_splits = cfg.splits;
  c.threads = cfg.threads;
  c.em = em_config(cfg);
  const BandwidthMode mode = resolved_mode(cfg, c.method);
  if (mode == BandwidthMode::Manual) {
    if (c.method == Method::LLMR)
      c.llmr_bandwidths = manual_bandwidths(cfg);
    else
      c.baseline_bandwidth = manual_baseline_bandwidth(cfg);
  } else if ((mode == BandwidthMode::CV) == (c.method == Method::LLMR)) {
    fail(ErrorCode::InvalidArgument, "llmr uses plugin or manual bandwidths, the baselines cv or manual");
  }
  const Dataset data = parse_scalar_dataset_file(cfg.input);
  const CvMspeResult r = cv_mspe(data, c);
  std::ostringstream os;
  os << "method,scheme,d,splits,median_mspe,sd_mspe,failures\n";
  os << cfg.method << ',' << cfg.scheme << ',' << c.d << ',' << r.splits << ',' << format_number(r.median) << ','
     << format_number(r.sd) << ',' << r.failures << '\n';
  return os.str();
}

}  // namespace

GridSpec parse_grid(const std::string& text) {
  GridSpec g;
  char c1 = 0, c2 = 0;
  std::istringstream ss(text);
  if (!(ss >> g.a >> c1 >> g.b >> c2 >> g.k) || c1 != ':' || c2 != ':' || !ss.eof())
    fail(ErrorCode::ParseError, "grid must look like a:b:k, got '" + text + "'");
  if (g.k < 1 || !std::isfinite(g.a) || !std::isfinite(g.b))
    fail(ErrorCode::InvalidArgument, "grid needs finite bounds and k >= 1");
  return g;
}

int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    require(cfg.threads >= 1, "--threads must be positive");
    std::string text;
    if (cfg.subcommand == "fit")
      text = run_fit(cfg);
    else if (cfg.subcommand == "vc-fit")
      text = run_vc_fit(cfg);
    else if (cfg.subcommand == "bandwidth")
      text = run_bandwidth(cfg);
    else if (cfg.subcommand == "simulate")
      text = run_simulate(cfg);
    else if (cfg.subcommand == "coverage")
      text = run_coverage(cfg, err);
    else if (cfg.subcommand == "theory-check")
      text = run_theory_check(cfg);
    else if (cfg.subcommand == "cv")
      text = run_cv(cfg);
    else
      fail(ErrorCode::InvalidArgument, "unknown subcommand '" + cfg.subcommand + "'");
    emit(cfg, text, out);
    return 0;
  } catch (const Error& e) {
    err << "error " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return is_validation_error(e.code()) ? 1 : 2;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonparametric and varying-coefficient modal regression"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string bandwidth;
  std::string method_list;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--output", cfg.output, "Result file (a <file>.config.json echo is written next to it)");
    sub->add_option("--kernel", cfg.kernel, "epanechnikov | gaussian");
    sub->add_option("--threads", cfg.threads, "Worker threads");
    sub->add_option("--seed", cfg.seed, "Random seed");
    sub->add_option("--max-iter", cfg.max_iter, "EM iteration cap");
    sub->add_option("--starts", cfg.starts, "EM starts per point");
    sub->add_option("--order", cfg.order, "Local polynomial order");
  };
  const auto fitting = [&](CLI::App* sub) {
    sub->add_option("--input", cfg.input, "CSV dataset")->required();
    sub->add_option("--method", cfg.method, "ll | lm | lmd | llmr");
    sub->add_option("--bandwidth", bandwidth, "plugin | manual | cv");
    sub->add_option("--h1", cfg.h1, "Predictor bandwidth (also the baseline bandwidth)");
    sub->add_option("--h2", cfg.h2, "Response bandwidth");
    sub->add_option("--grid", cfg.grid, "Evaluation grid a:b:k");
  };
  const auto study = [&](CLI::App* sub) {
    sub->add_option("--scenario", cfg.scenario, "example1 | vc1 | vc2 | linear | vc-linear");
    sub->add_option("--n", cfg.n, "Sample size");
    sub->add_option("--reps", cfg.reps, "Replications");
  };

  auto* fit = app.add_subcommand("fit", "Modal or baseline curve on a grid");
  common(fit);
  fitting(fit);
  auto* vcfit = app.add_subcommand("vc-fit", "Varying-coefficient fit on a grid of u");
  common(vcfit);
  fitting(vcfit);
  auto* bw = app.add_subcommand("bandwidth", "Plug-in bandwidths as JSON");
  common(bw);
  bw->add_option("--input", cfg.input, "CSV dataset")->required();
  auto* sim = app.add_subcommand("simulate", "Generate a dataset");
  common(sim);
  study(sim);
  auto* cov = app.add_subcommand("coverage", "Coverage-probability study");
  common(cov);
  study(cov);
  cov->add_option("--method,--methods", method_list, "Comma-separated methods (default ll,lm,lmd,llmr)");
  cov->add_option("--widths", cfg.widths, "Interval half-lengths in units of sigma = 2")->delimiter(',');
  cov->add_option("--grid-size", cfg.grid_size, "Scalar prediction grid size");
  cov->add_option("--bandwidth", bandwidth, "plugin | manual (llmr)");
  cov->add_option("--h1", cfg.h1, "Manual llmr h1");
  cov->add_option("--h2", cfg.h2, "Manual llmr h2");
  auto* th = app.add_subcommand("theory-check", "Monte-Carlo check of the asymptotic formulas");
  common(th);
  study(th);
  th->add_option("--h1", cfg.h1, "Predictor bandwidth")->required();
  th->add_option("--h2", cfg.h2, "Response bandwidth")->required();
  th->add_option("--x0", cfg.x0, "Evaluation point");
  auto* cv = app.add_subcommand("cv", "Cross-validated median squared prediction error");
  common(cv);
  cv->add_option("--input", cfg.input, "CSV dataset")->required();
  cv->add_option("--method", cfg.method, "ll | lm | lmd | llmr");
  cv->add_option("--bandwidth", bandwidth, "plugin | manual | cv");
  cv->add_option("--h1", cfg.h1, "Bandwidth");
  cv->add_option("--h2", cfg.h2, "Response bandwidth (llmr)");
  cv->add_option("--scheme", cfg.scheme, "kfold | mccv");
  cv->add_option("--folds", cfg.folds, "d: folds, or 1/d held out per mccv split");
  cv->add_option("--splits", cfg.splits, "Monte-Carlo splits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error " << error_code_name(ErrorCode::ParseError) << ": " << e.what() << '\n';
    return 1;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();
  if (!method_list.empty()) {
    cfg.methods.clear();
    std::stringstream ss(method_list);
    std::string m;
    while (std::getline(ss, m, ',')) cfg.methods.push_back(m);
  }
  if (!bandwidth.empty()) {
    static const std::map<std::string, BandwidthMode> modes{
        {"plugin", BandwidthMode::Plugin}, {"manual", BandwidthMode::Manual}, {"cv", BandwidthMode::CV}};
    const auto it = modes.find(bandwidth);
    if (it == modes.end()) {
      err << "error " << error_code_name(ErrorCode::InvalidArgument) << ": --bandwidth must be plugin, manual or cv\n";
      return 1;
    }
    cfg.bandwidth = it->second;
  }
  return dispatch(cfg, out, err);
}

}  // namespace modalreg::cli
