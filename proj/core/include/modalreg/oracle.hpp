#pragma once

#include "modalreg/modal_lpr.hpp"

namespace modalreg {

// Brute-force maximizer over y of the local-constant objective
// (1/n) sum_i K_h1(x_i - x0) phi_h2(y_i - y): an exhaustive scan of
// grid_size equally spaced points on [y_lo, y_hi], then golden-section
// refinement between the neighbours of the best grid point.
double grid_search_mode_oracle(const Dataset& data, double x0, const Bandwidths& bw, double y_lo,
                               double y_hi, int grid_size = 2000, const KernelSpec& kernel = {});

}  // namespace modalreg
