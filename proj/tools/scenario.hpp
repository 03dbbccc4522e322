#pragma once

#include <string>
#include <vector>

#include "fradrc/adrc.hpp"
#include "fradrc/analysis.hpp"
#include "fradrc/error.hpp"
#include "fradrc/plant.hpp"

namespace fradrc::cli {

// Malformed config: carries the file position when it is known.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct SimSpec {
  bool present = false;
  double dt = 0.0;
  double T = 0.0;
  double ref = 1.0;
  DisturbanceProfile dist;
  double band = 0.02;
};

struct MseSpec {
  bool present = false;
  FreqGrid grid;
};

struct FreqSpec {
  double lo = 1e-1, hi = 1e5;
  int points_per_decade = 50;
};

struct Scenario {
  std::string name;
  PlantModel plant;
  std::vector<AdrcDesign> designs;
  SimSpec sim;
  MseSpec mse;
  FreqSpec freq;
  std::vector<double> sweep_k;
};

Scenario load_scenario(const std::string& path);

// Rational from "6/5", "1.2" or "2".
Rational parse_rational(const std::string& s);

// Designs without kp/kd are observer-only: frequency-domain estimation work only.
bool has_tracking(const AdrcDesign& d);

// Ideal order used for the estimation-error metric: m + chi - 1 for FO, m otherwise.
double ideal_order(const AdrcDesign& d);

}  // namespace fradrc::cli
