#include "fradrc/gl.hpp"

#include <cmath>

#include "fradrc/error.hpp"

namespace fradrc {

GlCoeffs gl_coefficients(double alpha, int count) {
  if (!std::isfinite(alpha)) throw InvalidArgument("gl_coefficients: non-finite alpha");
  if (count < 1) throw InvalidArgument("gl_coefficients: count must be >= 1");
  GlCoeffs out{alpha, std::vector<double>(static_cast<std::size_t>(count) + 1)};
  out.coeffs[0] = 1.0;
  for (int j = 1; j <= count; ++j) {
    out.coeffs[j] = out.coeffs[j - 1] * (1.0 - (alpha + 1.0) / j);
  }
  return out;
}

}  // namespace fradrc
