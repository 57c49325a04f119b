#include "modalreg/theory.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <optional>

#include "modalreg/parallel.hpp"

namespace modalreg {

namespace {

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

Eigen::VectorXd unit(int size, int index) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(size);
  e[index] = 1.0;
  return e;
}

}  // namespace

TheoryQuantities theory_quantities(const KernelSpec& kernel, int p, const ModalErrorDerivatives& g,
                                   double f) {
  require(p >= 0, "order must be nonnegative");
  require(f > 0.0, "design density must be positive");
  TheoryQuantities t;
  t.p = p;
  t.moments = kernel_moments(kernel, p);
  const int d = p + 1;
  t.S.resize(d, d);
  t.S_tilde.resize(d, d);
  t.S_star.resize(d, d);
  t.c_p.resize(d);
  t.c_tilde.resize(d);
  t.c_star.resize(d);
  for (int j = 0; j < d; ++j) {
    for (int l = 0; l < d; ++l) {
      t.S(j, l) = t.moments.mu[j + l];
      t.S_tilde(j, l) = t.moments.mu[j + l + 1];
      t.S_star(j, l) = t.moments.nu[j + l];
    }
    t.c_p[j] = t.moments.mu[p + 1 + j];
    t.c_tilde[j] = t.moments.mu[p + 2 + j];
    t.c_star[j] = t.moments.mu[j];
  }
  t.g0 = g.g0;
  t.g2 = g.g2;
  t.g3 = g.g3;
  t.f = f;
  t.gamma = g.g2 * f;
  return t;
}

double TheoryQuantities::variance(int v, std::size_t n, const Bandwidths& bw) const {
  require(v >= 0 && v <= p, "derivative order must lie in 0..p");
  const Eigen::MatrixXd Sinv = S.inverse();
  const Eigen::VectorXd e = unit(p + 1, v);
  const double quad = e.dot(Sinv * S_star * Sinv * e);
  const double vf = factorial(v);
  return quad * vf * vf * g0 * moments.tilde_nu /
         (f * g2 * g2 * static_cast<double>(n) * std::pow(bw.h1, 1 + 2 * v) * std::pow(bw.h2, 3));
}

double TheoryQuantities::bias(int v, const Bandwidths& bw, double m_p1) const {
  require((p - v) % 2 == 1, "this bias form needs p - v odd");
  const Eigen::VectorXd e = unit(p + 1, v);
  const double vf = factorial(v);
  const Eigen::VectorXd inner =
      std::pow(bw.h1, p + 1 - v) * vf / factorial(p + 1) * m_p1 * c_p -
      g3 * vf * bw.h2 * bw.h2 / (2.0 * g2 * std::pow(bw.h1, v)) * c_star;
  return e.dot(S.lu().solve(inner));
}

double TheoryQuantities::bias_even(int v, const Bandwidths& bw, double m_p1, double m_p2,
                                   double gamma_ratio) const {
  require((p - v) % 2 == 0, "this bias form needs p - v even");
  const Eigen::VectorXd e = unit(p + 1, v);
  const double vf = factorial(v);
  const Eigen::VectorXd inner =
      c_tilde * std::pow(bw.h1, p + 2 - v) * vf / factorial(p + 2) *
          (m_p2 + (p + 2) * m_p1 * gamma_ratio) -
      g3 * vf * bw.h2 * bw.h2 / (2.0 * g2 * std::pow(bw.h1, v)) * c_star;
  return e.dot(S.lu().solve(inner));
}

VCTheoryQuantities vc_theory_quantities(const Eigen::MatrixXd& second_moment,
                                        const Eigen::VectorXd& first_moment,
                                        const ModalErrorDerivatives& g, double f,
                                        const KernelSpec& kernel) {
  require(second_moment.rows() == second_moment.cols() &&
              second_moment.rows() == first_moment.size(),
          "moment dimensions disagree");
  require(f > 0.0, "index density must be positive");
  VCTheoryQuantities q;
  q.moments = kernel_moments(kernel, 1);
  q.Delta = g.g2 * second_moment;
  q.Delta_tilde = g.g0 * second_moment;
  q.alpha = g.g2 * second_moment;
  q.beta = g.g3 * first_moment;
  q.f = f;
  return q;
}

Eigen::MatrixXd VCTheoryQuantities::covariance(std::size_t n, const Bandwidths& bw) const {
  const Eigen::MatrixXd Dinv = Delta.inverse();
  return moments.tilde_nu * moments.nu[0] /
         (static_cast<double>(n) * bw.h1 * std::pow(bw.h2, 3) * f) * Dinv * Delta_tilde * Dinv;
}

Eigen::VectorXd VCTheoryQuantities::bias(const Bandwidths& bw, const Eigen::VectorXd& gpp) const {
  require(gpp.size() == alpha.cols(), "need one second derivative per coefficient");
  const Eigen::VectorXd inner = moments.mu[2] * bw.h1 * bw.h1 * (alpha * gpp) - bw.h2 * bw.h2 * beta;
  return 0.5 * Delta.lu().solve(inner);
}

void correlated_normal_moments(double rho, Eigen::MatrixXd& second, Eigen::VectorXd& first) {
  require(std::abs(rho) < 1.0, "correlation must lie in (-1, 1)");
  using boost::math::quadrature::gauss;
  constexpr double kBox = 9.0;
  const double det = 1.0 - rho * rho;
  const double norm = 1.0 / (2.0 * 3.14159265358979323846 * std::sqrt(det));
  const auto density = [&](double a, double b) {
    return norm * std::exp(-(a * a - 2.0 * rho * a * b + b * b) / (2.0 * det));
  };
  const auto moment = [&](auto&& h) {
    // Split each axis at 0 so the peak sits on panel edges.
    double total = 0.0;
    for (double a0 : {-kBox, 0.0})
      for (double b0 : {-kBox, 0.0}) {
        total += gauss<double, 30>::integrate(
            [&](double a) {
              return gauss<double, 30>::integrate([&](double b) { return h(a, b) * density(a, b); }, b0,
                                                  b0 + kBox);
            },
            a0, a0 + kBox);
      }
    return total;
  };
  const auto comp = [](int k, double a, double b) { return k == 0 ? 1.0 : (k == 1 ? a : b); };
  second.resize(3, 3);
  first.resize(3);
  for (int j = 0; j < 3; ++j) {
    first[j] = moment([&](double a, double b) { return comp(j, a, b); });
    for (int l = j; l < 3; ++l) {
      second(j, l) = moment([&](double a, double b) { return comp(j, a, b) * comp(l, a, b); });
      second(l, j) = second(j, l);
    }
  }
}

double ks_distance_normal(std::vector<double> z) {
  require(!z.empty(), "KS distance needs a sample");
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double F = normal_cdf(z[i]);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return d;
}

void TheoryCheckConfig::validate() const {
  bw.validate();
  require(n >= 20, "theory checks need n >= 20");
  require(replications >= 2, "theory checks need at least two replications");
  require(threads >= 1, "threads must be positive");
  require(x0 > 0.0 && x0 < 1.0, "evaluation point must lie inside (0, 1)");
  em.validate();
  const double nh = static_cast<double>(n) * bw.h1 * std::pow(bw.h2, 5);
  const double ratio = std::pow(bw.h1, em.order + 1) / bw.h2;
  if (nh < 1e-2 || ratio > 10.0)
    fail(ErrorCode::RateViolation, "bandwidth schedule grossly violates the rate conditions (n h1 h2^5 = " +
                                       std::to_string(nh) + ", h1^(p+1)/h2 = " + std::to_string(ratio) + ")");
}

TheoryCheckReport mc_theory_check(const TheoryCheckConfig& cfg) {
  cfg.validate();
  require(!cfg.scenario.varying_coefficient(), "mc_theory_check needs a scalar scenario");
  require(cfg.em.order == 1, "theory check covers the local linear estimator");
  const Scenario& sc = cfg.scenario;
  const double mode = sc.error.mode();
  const auto m = [&](double x) { return sc.location(x) + sc.scale(x) * mode; };
  const double x0 = cfg.x0;
  const double step = 1e-3;
  const double m2 = (m(x0 + step) - 2.0 * m(x0) + m(x0 - step)) / (step * step);

  // Centered error density at x0, then the design density of U(0, 1).
  const TheoryQuantities tq =
      theory_quantities(cfg.em.kernel, 1, modal_error_derivatives(sc.error, sc.scale(x0)), 1.0);

  const auto reps = static_cast<std::size_t>(cfg.replications);
  std::vector<double> est(reps, std::numeric_limits<double>::quiet_NaN());
  parallel_for(reps, cfg.threads, [&](std::size_t r) {
    const ScalarSample s = generate_scalar(sc, cfg.n, cfg.seed, r);
    try {
      est[r] = fit_point(s.data, x0, cfg.bw, cfg.em).coefficients.beta[0];
    } catch (const Error&) {
    }
  });

  TheoryCheckReport rep;
  rep.truth = m(x0);
  rep.theoretical_variance = tq.variance(0, cfg.n, cfg.bw);
  rep.theoretical_bias = tq.bias(0, cfg.bw, m2);
  for (double e : est)
    if (std::isfinite(e)) rep.estimates.push_back(e);
  rep.replications = static_cast<int>(rep.estimates.size());
  rep.failures = cfg.replications - rep.replications;
  require(rep.replications >= 2, "too few successful replications");
  double mean = 0.0;
  for (double e : rep.estimates) mean += e;
  mean /= rep.replications;
  double ss = 0.0;
  for (double e : rep.estimates) ss += (e - mean) * (e - mean);
  rep.empirical_variance = ss / (rep.replications - 1);
  rep.empirical_bias = mean - rep.truth;
  rep.bias_standard_error = std::sqrt(rep.empirical_variance / rep.replications);
  rep.variance_ratio = rep.empirical_variance / rep.theoretical_variance;
  const double sd = std::sqrt(rep.theoretical_variance);
  std::vector<double> z1, z2;
  for (double e : rep.estimates) {
    z1.push_back((e - mean) / sd);
    z2.push_back((e - rep.truth - rep.theoretical_bias) / sd);
  }
  rep.ks_distance = ks_distance_normal(z1);
  rep.ks_distance_centered = ks_distance_normal(z2);
  return rep;
}

VCTheoryCheckReport vc_theory_check(const TheoryCheckConfig& cfg) {
  cfg.validate();
  const Scenario& sc = cfg.scenario;
  require(sc.varying_coefficient(), "vc_theory_check needs a varying-coefficient scenario");
  const double u0 = cfg.x0;
  Eigen::MatrixXd second;
  Eigen::VectorXd first;
  correlated_normal_moments(sc.covariate_corr, second, first);
  const VCTheoryQuantities q =
      vc_theory_quantities(second, first, modal_error_derivatives(sc.error, sc.scale(u0)), 1.0,
                           cfg.em.kernel);
  // Second derivatives of the modal coefficients; the intercept also carries
  // scale(u) * mode.
  const double step = 1e-3;
  const auto g_lo = sc.modal_coefficients(u0 - step);
  const auto g_mid = sc.modal_coefficients(u0);
  const auto g_hi = sc.modal_coefficients(u0 + step);
  Eigen::VectorXd gpp(3);
  for (int j = 0; j < 3; ++j) gpp[j] = (g_hi[j] - 2.0 * g_mid[j] + g_lo[j]) / (step * step);

  const auto reps = static_cast<std::size_t>(cfg.replications);
  std::vector<std::optional<Eigen::VectorXd>> est(reps);
  parallel_for(reps, cfg.threads, [&](std::size_t r) {
    const VCSample s = generate_vc(sc, cfg.n, cfg.seed, r);
    try {
      const VCPointFit fit = vc_fit_point(s.data, u0, cfg.bw, cfg.em);
      est[r] = Eigen::Map<const Eigen::VectorXd>(fit.coefficients.b.data(), 3);
    } catch (const Error&) {
    }
  });

  VCTheoryCheckReport rep;
  rep.truth = Eigen::Map<const Eigen::VectorXd>(g_mid.data(), 3);
  rep.theoretical_bias = q.bias(cfg.bw, gpp);
  rep.theoretical_covariance = q.covariance(cfg.n, cfg.bw);
  std::vector<Eigen::VectorXd> ok;
  for (const auto& e : est)
    if (e) ok.push_back(*e);
  rep.replications = static_cast<int>(ok.size());
  rep.failures = cfg.replications - rep.replications;
  require(rep.replications >= 2, "too few successful replications");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  for (const auto& e : ok) mean += e;
  mean /= rep.replications;
  rep.empirical_covariance = Eigen::MatrixXd::Zero(3, 3);
  for (const auto& e : ok) rep.empirical_covariance += (e - mean) * (e - mean).transpose();
  rep.empirical_covariance /= rep.replications - 1;
  rep.empirical_bias = mean - rep.truth;
  rep.variance_ratios =
      rep.empirical_covariance.diagonal().cwiseQuotient(rep.theoretical_covariance.diagonal());
  return rep;
}

}  // namespace modalreg
