#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "modalreg/modal_lpr.hpp"

namespace testing {

// Gaussian elimination with partial pivoting in long double. Kept free of
// Eigen's decompositions so it can serve as an independent oracle.
inline std::vector<double> dense_solve(std::vector<std::vector<long double>> a,
                                       std::vector<long double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const long double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    long double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = static_cast<double>(s / a[i][i]);
  }
  return x;
}

// Weighted normal equations D'WD b = D'Wy assembled term by term.
inline std::vector<double> normal_equations(const std::vector<std::vector<double>>& rows,
                                            const std::vector<double>& y,
                                            const std::vector<double>& w) {
  const std::size_t q = rows.front().size();
  std::vector<std::vector<long double>> a(q, std::vector<long double>(q, 0.0L));
  std::vector<long double> b(q, 0.0L);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t r = 0; r < q; ++r) {
      b[r] += static_cast<long double>(w[i]) * rows[i][r] * y[i];
      for (std::size_t c = 0; c < q; ++c) a[r][c] += static_cast<long double>(w[i]) * rows[i][r] * rows[i][c];
    }
  return dense_solve(a, b);
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

inline double epanechnikov(double t) { return std::abs(t) < 1.0 ? 0.75 * (1.0 - t * t) : 0.0; }
inline double gauss(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); }

}  // namespace testing
