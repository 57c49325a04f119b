#include "modalreg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "modalreg/error.hpp"

namespace modalreg {

double grid_search_mode_oracle(const Dataset& data, double x0, const Bandwidths& bw, double y_lo,
                               double y_hi, int grid_size, const KernelSpec& kernel) {
  bw.validate();
  require(grid_size >= 100, "grid_size must be at least 100");
  require(std::isfinite(y_lo) && std::isfinite(y_hi) && y_lo < y_hi, "need a finite range y_lo < y_hi");

  std::vector<double> k, y;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double w = scaled_kernel(kernel, data.x[i] - x0, bw.h1);
    if (w > 0.0) {
      k.push_back(w);
      y.push_back(data.y[i]);
    }
  }
  if (k.empty()) fail(ErrorCode::DegenerateWindow, "no observation inside the kernel window");
  const double inv_n = 1.0 / static_cast<double>(data.size());
  const auto profile = [&](double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * scaled_normal_pdf(y[i] - t, bw.h2);
    return s * inv_n;
  };

  const double step = (y_hi - y_lo) / (grid_size - 1);
  int best = 0;
  double best_value = -1.0;
  for (int g = 0; g < grid_size; ++g) {
    const double v = profile(y_lo + g * step);
    if (v > best_value) {
      best_value = v;
      best = g;
    }
  }

  constexpr double inv_phi = 0.61803398874989484820;
  double a = y_lo + std::max(best - 1, 0) * step;
  double b = y_lo + std::min(best + 1, grid_size - 1) * step;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = profile(c), fd = profile(d);
  while (b - a > 1e-12 * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = profile(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = profile(d);
    }
  }
  const double refined = 0.5 * (a + b);
  const double grid_point = y_lo + best * step;
  return profile(refined) >= best_value ? refined : grid_point;
}

}  // namespace modalreg
