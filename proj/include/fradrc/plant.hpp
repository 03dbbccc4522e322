#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "fradrc/fracpoly.hpp"

namespace fradrc {

// y^(m) = -sum_{i<m} a_i y^(i) + b u + d, i.e. G(s) = b / (s^m + a_{m-1} s^{m-1} + ... + a_0).
struct PlantModel {
  std::vector<double> a;  // a_0 .. a_{m-1}, ascending
  double b = 1.0;

  int order() const { return static_cast<int>(a.size()); }
  void validate() const;
  // s^m + sum a_i s^i
  FracPoly denominator() const;
  FracRational transfer() const;
};

struct DisturbanceProfile {
  enum class Kind { None, Step };
  Kind kind = Kind::None;
  double t_on = 0.0;
  double amplitude = 0.0;

  double at(double t) const;
  static DisturbanceProfile none() { return {}; }
  static DisturbanceProfile step(double t_on, double amplitude);
};

// x_{k+1} = F x_k + G (b u_k + d_k), y_k = x_k[0], with x = [y, y', ..., y^(m-1)].
struct DiscretePlant {
  Eigen::MatrixXd F;
  Eigen::VectorXd G;
  double dt = 0.0;
};

// Matrix exponential by scaling and squaring with a Taylor series.
Eigen::MatrixXd expm(const Eigen::MatrixXd& m);

// Exact zero-order-hold discretization of the companion realization.
DiscretePlant plant_discretize(const PlantModel& p, double dt);

// Number of dt steps in [0, T]; throws unless dt divides T to within rounding.
int grid_steps(double dt, double T);

// Stateful ZOH simulator, zero initial state by default.
class PlantSimulator {
 public:
  PlantSimulator(PlantModel p, double dt);

  double output() const { return x_[0]; }
  const Eigen::VectorXd& state() const { return x_; }
  const PlantModel& model() const { return plant_; }
  void set_state(const Eigen::VectorXd& x);
  void step(double u, double d = 0.0);

  // -sum a_i y^(i) + (b - b0) u + d evaluated on the current state.
  double total_disturbance(double u, double b0, double d) const;

 private:
  PlantModel plant_;
  DiscretePlant disc_;
  Eigen::VectorXd x_;
};

// Output samples y_0..y_N on t_k = k dt, N = T/dt; u must hold N+1 samples.
// Throws NumericalFailure naming the sample index if the output stops being finite.
std::vector<double> simulate_plant(const PlantModel& p, std::span<const double> u,
                                   const DisturbanceProfile& d, double dt, double T);

}  // namespace fradrc
