#include "fradrc/grid.hpp"

#include <cmath>

#include "fradrc/error.hpp"

namespace fradrc {

std::vector<double> log_space(double lo, double hi, int points_per_decade) {
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi))
    throw InvalidArgument("log_space: need 0 < lo < hi");
  if (points_per_decade < 1) throw InvalidArgument("log_space: points_per_decade must be >= 1");
  const double decades = std::log10(hi / lo);
  const int n = std::max(2, static_cast<int>(std::ceil(decades * points_per_decade)) + 1);
  std::vector<double> out(static_cast<std::size_t>(n));
  const double l0 = std::log10(lo);
  for (int i = 0; i < n; ++i) out[i] = std::pow(10.0, l0 + decades * i / (n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace fradrc
