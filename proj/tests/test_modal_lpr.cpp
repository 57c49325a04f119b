#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "modalreg/error.hpp"
#include "modalreg/modal_lpr.hpp"
#include "modalreg/oracle.hpp"
#include "modalreg/scenarios.hpp"
#include "support.hpp"

using namespace modalreg;

namespace {

Dataset line_data(std::size_t n, double a, double b) {
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    y[i] = a + b * x[i];
  }
  return Dataset(x, y);
}

// Term-by-term objective, written out without the library's helpers.
double direct_objective(const Dataset& d, const ModalCoefficients& c, const Bandwidths& bw) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double dx = d.x[i] - c.center;
    double fit = 0.0;
    for (std::size_t j = 0; j < c.beta.size(); ++j) fit += c.beta[j] * std::pow(dx, static_cast<double>(j));
    s += testing::epanechnikov(dx / bw.h1) / bw.h1 * testing::gauss((d.y[i] - fit) / bw.h2) / bw.h2;
  }
  return static_cast<double>(s / d.size());
}

}  // namespace

TEST_CASE("dataset and config validation") {
  CHECK_THROWS_AS(Dataset({1.0}, {1.0}), Error);
  CHECK_THROWS_AS(Dataset({1.0, 2.0}, {1.0}), Error);
  CHECK_THROWS_AS(Dataset({1.0, NAN}, {1.0, 2.0}), Error);
  CHECK_THROWS_AS((Bandwidths{0.0, 1.0}.validate()), Error);
  CHECK_THROWS_AS((Bandwidths{1.0, INFINITY}.validate()), Error);
  EMConfig cfg;
  cfg.n_starts = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("objective reference values") {
  const Dataset d({0.5, 3.0}, {2.0, 7.0});
  ModalCoefficients c{{2.0}, 0.5};
  const Bandwidths bw{0.3, 0.7};
  // Only the first point is inside the window and it sits at both kernels' peaks.
  CHECK(objective(d, c, bw) == doctest::Approx(0.5 * (0.75 / 0.3) * (1.0 / (0.7 * std::sqrt(2 * M_PI)))).epsilon(1e-14));
  c.center = 10.0;
  CHECK(objective(d, c, bw) == 0.0);
  c.beta = {NAN};
  CHECK_THROWS_AS(objective(d, c, bw), Error);
}

TEST_CASE("objective matches direct summation on an Example-1 sample") {
  const Dataset d = generate_example1(300, 17).data;
  const Bandwidths bw{0.2, 0.9};
  for (const auto& c : {ModalCoefficients{{3.1}, 0.5}, ModalCoefficients{{3.0, -1.5}, 0.5},
                        ModalCoefficients{{2.0, 0.3, -4.0}, 0.3}})
    CHECK(testing::rel_diff(objective(d, c, bw), direct_objective(d, c, bw)) < 1e-12);
}

TEST_CASE("e-step weights") {
  SUBCASE("symmetric configuration gives uniform weights") {
    const Dataset d({0.5, 0.5, 0.5, 0.5}, {1.0, 3.0, 1.0, 3.0});
    const auto w = e_step(d, ModalCoefficients{{2.0}, 0.5}, {0.2, 1.0});
    for (double v : w) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("a single in-window observation carries all the weight") {
    const Dataset d({0.1, 0.5, 0.9}, {1.0, 2.0, 3.0});
    const auto w = e_step(d, ModalCoefficients{{0.0, 1.0}, 0.5}, {0.2, 0.1});
    CHECK(w[0] == 0.0);
    CHECK(w[1] == 1.0);
    CHECK(w[2] == 0.0);
  }
  SUBCASE("empty window is degenerate") {
    const Dataset d({0.1, 0.9}, {1.0, 2.0});
    try {
      (void)e_step(d, ModalCoefficients{{0.0}, 0.5}, {0.2, 0.1});
      FAIL("expected DegenerateWindow");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateWindow);
    }
  }
  SUBCASE("matches direct recomputation") {
    const Dataset d = generate_example1(250, 3).data;
    const Bandwidths bw{0.25, 1.1};
    const ModalCoefficients c{{3.2, 1.0}, 0.45};
    const auto w = e_step(d, c, bw);
    std::vector<double> raw(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double dx = d.x[i] - c.center;
      raw[i] = testing::epanechnikov(dx / bw.h1) * testing::gauss((d.y[i] - c.beta[0] - c.beta[1] * dx) / bw.h2);
    }
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(w[i] >= 0.0);
      CHECK(std::abs(w[i] - raw[i] / total) < 1e-14);
      sum += w[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("m-step") {
  SUBCASE("uniform weights reproduce ordinary least squares") {
    const Dataset d({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 2.0, 5.0});
    const std::vector<double> w(4, 0.25);
    const ModalCoefficients c = m_step(d, w, 1.5, 1);
    // OLS slope 1.1, intercept at x = 1.5 equals the mean of y.
    CHECK(c.beta[0] == doctest::Approx(2.75).epsilon(1e-13));
    CHECK(c.beta[1] == doctest::Approx(1.1).epsilon(1e-13));
  }
  SUBCASE("point mass returns that response") {
    const Dataset d({0.0, 1.0, 2.0}, {4.0, -2.0, 9.0});
    const ModalCoefficients c = m_step(d, std::vector<double>{0.0, 1.0, 0.0}, 0.3, 0);
    CHECK(c.beta[0] == doctest::Approx(-2.0).epsilon(1e-14));
  }
  SUBCASE("random weights match an independent dense solve") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> x(10), y(10), w(10);
      for (int i = 0; i < 10; ++i) {
        x[i] = unif(gen);
        y[i] = 3.0 * unif(gen) - 1.0;
        w[i] = unif(gen);
      }
      const Dataset d(x, y);
      const int p = rep % 3;
      const double x0 = unif(gen);
      std::vector<std::vector<double>> rows;
      for (int i = 0; i < 10; ++i) {
        rows.emplace_back();
        for (int j = 0; j <= p; ++j) rows.back().push_back(std::pow(x[i] - x0, j));
      }
      const auto ref = testing::normal_equations(rows, y, w);
      CHECK(testing::max_rel_diff(m_step(d, w, x0, p).beta, ref) < 1e-10);
      CHECK(testing::max_rel_diff(m_step(d, w, x0, p, 0.3).beta, ref) < 1e-10);
    }
  }
  SUBCASE("too few distinct points is singular") {
    const Dataset d({0.5, 0.5, 0.5}, {1.0, 2.0, 3.0});
    try {
      (void)m_step(d, std::vector<double>{1.0, 1.0, 1.0}, 0.5, 1);
      FAIL("expected SingularDesign");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SingularDesign);
    }
  }
}

TEST_CASE("fit_point recovers a noiseless line") {
  const Dataset d = line_data(101, 0.0, 2.0);
  EMConfig cfg;
  for (double x0 : {0.2, 0.5, 0.77}) {
    const PointFit f = fit_point(d, x0, {0.15, 0.3}, cfg);
    CHECK(std::abs(f.coefficients.beta[0] - 2.0 * x0) < 1e-8);
    CHECK(std::abs(f.coefficients.beta[1] - 2.0) < 1e-8);
    CHECK(f.coefficients.center == x0);
    CHECK(f.n_starts_used == 6);
    CHECK(f.objective == doctest::Approx(*std::max_element(f.start_objectives.begin(), f.start_objectives.end())).epsilon(1e-12));
  }
}

TEST_CASE("fit_point equivariance") {
  const Dataset d = generate_example1(400, 8).data;
  const Bandwidths bw{0.2, 1.0};
  const EMConfig cfg;
  const PointFit base = fit_point(d, 0.5, bw, cfg);

  Dataset shifted = d;
  for (double& y : shifted.y) y += 3.25;
  const PointFit s = fit_point(shifted, 0.5, bw, cfg);
  CHECK(std::abs(s.coefficients.beta[0] - base.coefficients.beta[0] - 3.25) < 1e-6);
  CHECK(std::abs(s.coefficients.beta[1] - base.coefficients.beta[1]) < 1e-5);

  Dataset scaled = d;
  for (double& x : scaled.x) x = 4.0 * x - 1.0;
  const PointFit sc = fit_point(scaled, 1.0, {4.0 * bw.h1, bw.h2}, cfg);
  CHECK(std::abs(sc.coefficients.beta[0] - base.coefficients.beta[0]) < 1e-6);
  CHECK(std::abs(4.0 * sc.coefficients.beta[1] - base.coefficients.beta[1]) < 1e-5);
}

// A converged run is a fixed point in the sense of the stopping rule: one
// more cycle either moves theta by less than tol_param or gains less than
// tol_obj relative objective.
TEST_CASE("EM ascent and fixed point") {
  const Dataset d = generate_example1(300, 21).data;
  EMConfig cfg;
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double x0 = 0.1 + 0.8 * unif(gen);
    const Bandwidths bw{0.08 + 0.3 * unif(gen), 0.2 + 2.0 * unif(gen)};
    cfg.order = rep % 3;
    ModalCoefficients start;
    start.center = x0;
    for (int j = 0; j <= cfg.order; ++j) start.beta.push_back(8.0 * unif(gen) - 2.0);
    const EmPath path = em_iterate(d, x0, bw, cfg, start);
    for (std::size_t k = 1; k < path.objectives.size(); ++k)
      CHECK(path.objectives[k] >= path.objectives[k - 1] - 1e-12 * std::abs(path.objectives[k - 1]));
    if (path.converged) {
      EMConfig one = cfg;
      one.max_iter = 1;
      const EmPath again = em_iterate(d, x0, bw, one, path.final);
      double move = 0.0;
      for (std::size_t j = 0; j < again.final.beta.size(); ++j)
        move = std::max(move, std::abs(again.final.beta[j] - path.final.beta[j]) * std::pow(bw.h1, j));
      const double gain = again.objectives.back() - again.objectives.front();
      CHECK((move < cfg.tol_param || gain < cfg.tol_obj * again.objectives.front()));
    }
  }
}

TEST_CASE("fit_curve") {
  SUBCASE("slope of a noiseless quadratic") {
    std::vector<double> x(201), y(201);
    for (int i = 0; i <= 200; ++i) {
      x[i] = i / 200.0;
      y[i] = x[i] * x[i];
    }
    EMConfig cfg;
    cfg.order = 2;
    const std::vector<double> grid{0.2, 0.4, 0.6, 0.8};
    const CurveEstimate c = fit_curve(Dataset(x, y), grid, {0.1, 0.2}, cfg, 1);
    const auto v = c.values();
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(v[k] - 2.0 * grid[k]) < 1e-6);
  }
  SUBCASE("an empty window is recorded and the rest still fitted") {
    const Dataset d({0.0, 0.1, 0.2, 0.3, 0.9}, {0.0, 0.1, 0.2, 0.3, 0.9});
    const std::vector<double> grid{0.15, 0.6};
    const CurveEstimate c = fit_curve(d, grid, {0.2, 0.5}, EMConfig{});
    CHECK(c.failures() == 1);
    CHECK(c.fits[0].ok());
    REQUIRE_FALSE(c.fits[1].ok());
    CHECK(*c.fits[1].failure == ErrorCode::DegenerateWindow);
    CHECK(std::isnan(c.values()[1]));
  }
  SUBCASE("thread count does not change results") {
    const Dataset d = generate_example1(200, 4).data;
    std::vector<double> grid;
    for (int k = 0; k < 25; ++k) grid.push_back(0.1 + 0.8 * k / 24.0);
    const auto a = fit_curve(d, grid, {0.15, 1.0}, EMConfig{}, 0, 1).values();
    const auto b = fit_curve(d, grid, {0.15, 1.0}, EMConfig{}, 0, 4).values();
    CHECK(a == b);
  }
  SUBCASE("derivative order above p is rejected") {
    const Dataset d = line_data(20, 0.0, 1.0);
    const std::vector<double> grid{0.5};
    CHECK_THROWS_AS(fit_curve(d, grid, {0.3, 0.3}, EMConfig{}, 2), Error);
  }
}

TEST_CASE("local constant mode") {
  SUBCASE("single observation in the window") {
    const Dataset d({0.5, 0.95}, {1.7, 5.0});
    CHECK(local_constant_mode(d, 0.5, {0.2, 0.5}, EMConfig{}) == doctest::Approx(1.7).epsilon(1e-12));
  }
  SUBCASE("symmetric cluster") {
    const Dataset d({0.5, 0.5, 0.5, 0.5, 0.5}, {1.0, 1.5, 2.0, 2.5, 3.0});
    CHECK(std::abs(local_constant_mode(d, 0.5, {0.2, 0.6}, EMConfig{}) - 2.0) < 1e-6);
  }
  SUBCASE("agrees with the brute-force oracle") {
    const Dataset d = generate_example1(400, 12).data;
    for (double x0 : {0.25, 0.5, 0.75}) {
      const Bandwidths bw{0.15, 0.8};
      const double em = local_constant_mode(d, x0, bw, EMConfig{});
      const double oracle = grid_search_mode_oracle(d, x0, bw, -6.0, 12.0, 2000);
      CHECK(std::abs(em - oracle) <= 18.0 / 1999.0);
    }
  }
}

TEST_CASE("local problem construction") {
  const Dataset d({0.1, 0.45, 0.5, 0.62, 0.9}, {1, 2, 3, 4, 5});
  const LocalProblem p = make_local_problem(d, 0.5, {0.2, 1.0}, 2, KernelSpec{});
  REQUIRE(p.rows() == 3);
  CHECK(p.cols() == 3);
  CHECK(p.design(0, 1) == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(p.design(2, 2) == doctest::Approx(0.36).epsilon(1e-13));
  CHECK(p.kernel[1] == doctest::Approx(0.75 / 0.2).epsilon(1e-14));
}
