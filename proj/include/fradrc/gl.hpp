#pragma once

#include <vector>

namespace fradrc {

// Grunwald-Letnikov weights c_j = (-1)^j binom(alpha, j), j = 0..count.
struct GlCoeffs {
  double alpha = 0.0;
  std::vector<double> coeffs;
};

// c_0 = 1, c_j = c_{j-1} (1 - (alpha + 1) / j). Returns count + 1 weights.
GlCoeffs gl_coefficients(double alpha, int count);

}  // namespace fradrc
