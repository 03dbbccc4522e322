#pragma once

#include <vector>

namespace fradrc {

// Log-spaced points from lo to hi inclusive, `points_per_decade` per decade (at least 2 points).
std::vector<double> log_space(double lo, double hi, int points_per_decade);

}  // namespace fradrc
