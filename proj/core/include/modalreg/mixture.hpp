#pragma once

#include <array>

#include "modalreg/rng.hpp"

namespace modalreg {

// Two-component normal mixture w1 N(m1, s1^2) + w2 N(m2, s2^2).
struct ErrorMixture {
  std::array<double, 2> weights{0.5, 0.5};
  std::array<double, 2> means{-1.0, 1.0};
  std::array<double, 2> sds{2.5, 0.5};

  void validate() const;

  double pdf(double t) const noexcept;
  double cdf(double t) const noexcept;
  // order-th derivative of the density, order in 0..3.
  double pdf_derivative(double t, int order) const;
  double mean() const noexcept;
  double sd() const noexcept;
  // Global maximizer of the density (grid scan plus Brent refinement).
  double mode() const;
  double median() const;

  double sample(Philox4x32& rng) const noexcept;
};

// Density of the error re-centred at its mode and scaled by sigma,
// e = sigma (eps - mode): value and derivatives at 0.
struct ModalErrorDerivatives {
  double g0 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
};
ModalErrorDerivatives modal_error_derivatives(const ErrorMixture& mix, double sigma = 1.0);

}  // namespace modalreg
