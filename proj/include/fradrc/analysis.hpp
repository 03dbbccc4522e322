#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fradrc/adrc.hpp"
#include "fradrc/fracpoly.hpp"
#include "fradrc/plant.hpp"

namespace fradrc {

struct FreqGrid {
  std::vector<double> omegas;
  double lo = 0.0, hi = 0.0;
  int points_per_decade = 0;

  static FreqGrid make(double lo, double hi, int points_per_decade);
};

// [0.1, 1e4] rad/s, 100 points per decade.
FreqGrid default_mse_grid();

// Phase in degrees, continuous along the grid and anchored at low frequency to the
// phase of the lowest-order terms (so s^-2.2 starts at -198, not +162).
std::vector<double> unwrapped_phase_deg(const FracRational& g, std::span<const double> omegas);

struct Margins {
  double omega_gc = 0.0;
  double phase_margin = 0.0;         // degrees, at the first crossing
  std::vector<double> crossings;     // every |g| = 1 crossing found
  std::vector<double> phase_margins; // one per crossing
  bool multiple = false;
};

// Gain crossover by bisection on log|g(jw)| over a log grid of [lo, hi].
// Throws NotFound when |g| never crosses 1.
Margins margins(const FracRational& g, double lo = 1e-3, double hi = 1e6, int points_per_decade = 200);

struct MseResult {
  std::vector<double> omegas;
  std::vector<cdouble> delta;  // NaN where P is undefined
  int excluded = 0;
  double mse = 0.0;
};

// delta = 1 - (jw)^ideal_order P(jw); mse = mean |delta|^2 over defined points,
// weighted by the trapezoid rule in log omega so refining the grid does not bias it.
// More than 1% undefined points is a NumericalFailure.
MseResult mse_delta(const FracRational& P, double ideal_order, const FreqGrid& grid);

struct StepMetrics {
  double rise_time = 0.0;
  double peak_time = 0.0;
  double overshoot = 0.0;            // percent of |r|
  double settling_time = 0.0;        // +inf when the band is never held
  bool settled = true;
  double steady_state_error = 0.0;   // percent of |r|
  double y_max = 0.0;                // M_K
  double y_ss = 0.0;
  double dist_max_deviation = 0.0;   // max |y - y_ss| after onset
  double dist_recovery_time = 0.0;   // after onset; +inf when not recovered
  bool recovered = true;
};

// Step metrics on the pre-disturbance segment, disturbance metrics after onset.
// y_ss is the mean of the last 5% of the pre-disturbance segment.
StepMetrics step_metrics(const SimResult& sim, double r, const DisturbanceProfile& dist,
                         double band = 0.02);

// (max M_K - min M_K) / |ref| * 100.
double overshoot_fluctuation(const std::map<double, StepMetrics>& by_k, double reference);

// Open-loop gain multiplied by K: the whole PD controller for IO, kp alone otherwise.
AdrcDesign scale_gain(const AdrcDesign& d, double K);

void write_bode_csv(std::ostream& os, const FracRational& g, std::span<const double> omegas);
void write_delta_csv(std::ostream& os, const MseResult& r);
void write_metrics(std::ostream& os, const StepMetrics& m);

// printf("%.12g")
std::string fmt(double v);

}  // namespace fradrc
