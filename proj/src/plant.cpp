#include "fradrc/plant.hpp"

#include <cmath>
#include <string>

#include "fradrc/error.hpp"

namespace fradrc {

void PlantModel::validate() const {
  if (a.empty()) throw InvalidArgument("plant: order must be >= 1");
  for (double v : a)
    if (!std::isfinite(v)) throw InvalidArgument("plant: non-finite denominator coefficient");
  if (!std::isfinite(b)) throw InvalidArgument("plant: non-finite input gain");
}

FracPoly PlantModel::denominator() const {
  std::vector<Term> terms{{1.0, Rational(order())}};
  for (int i = 0; i < order(); ++i) terms.push_back({a[i], Rational(i)});
  return FracPoly(std::move(terms));
}

FracRational PlantModel::transfer() const { return {FracPoly::constant(b), denominator()}; }

double DisturbanceProfile::at(double t) const {
  if (kind == Kind::Step && t >= t_on) return amplitude;
  return 0.0;
}

DisturbanceProfile DisturbanceProfile::step(double t_on, double amplitude) {
  if (!(t_on >= 0.0)) throw InvalidArgument("disturbance: t_on must be >= 0");
  return {Kind::Step, t_on, amplitude};
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& m) {
  const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd a = m / std::ldexp(1.0, squarings);

  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd term = result;
  for (int k = 1; k < 40; ++k) {
    term = term * a / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-17 * result.cwiseAbs().maxCoeff()) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

DiscretePlant plant_discretize(const PlantModel& p, double dt) {
  p.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("plant_discretize: dt must be positive");
  const int m = p.order();
  // Augmented [[A, e_m], [0, 0]] * dt gives F and G in one exponential.
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(m + 1, m + 1);
  for (int i = 0; i + 1 < m; ++i) aug(i, i + 1) = 1.0;
  for (int j = 0; j < m; ++j) aug(m - 1, j) = -p.a[j];
  aug(m - 1, m) = 1.0;
  const Eigen::MatrixXd e = expm(aug * dt);
  return {e.topLeftCorner(m, m), e.topRightCorner(m, 1), dt};
}

int grid_steps(double dt, double T) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("T must be positive");
  const double ratio = T / dt;
  const double n = std::round(ratio);
  if (std::fabs(ratio - n) > 1e-6 * std::max(1.0, ratio))
    throw InvalidArgument("dt does not divide T");
  return static_cast<int>(n);
}

PlantSimulator::PlantSimulator(PlantModel p, double dt)
    : plant_(std::move(p)), disc_(plant_discretize(plant_, dt)),
      x_(Eigen::VectorXd::Zero(plant_.order())) {}

void PlantSimulator::set_state(const Eigen::VectorXd& x) {
  if (x.size() != x_.size()) throw InvalidArgument("plant: state size mismatch");
  x_ = x;
}

void PlantSimulator::step(double u, double d) { x_ = disc_.F * x_ + disc_.G * (plant_.b * u + d); }

double PlantSimulator::total_disturbance(double u, double b0, double d) const {
  double f = (plant_.b - b0) * u + d;
  for (int i = 0; i < plant_.order(); ++i) f -= plant_.a[i] * x_[i];
  return f;
}

std::vector<double> simulate_plant(const PlantModel& p, std::span<const double> u,
                                   const DisturbanceProfile& d, double dt, double T) {
  const int n = grid_steps(dt, T);
  if (u.size() != static_cast<std::size_t>(n) + 1)
    throw InvalidArgument("simulate_plant: input must have T/dt + 1 samples");
  PlantSimulator sim(p, dt);
  std::vector<double> y(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    y[k] = sim.output();
    if (!std::isfinite(y[k]))
      throw NumericalFailure("simulate_plant: non-finite output at sample " + std::to_string(k));
    if (k < n) sim.step(u[k], d.at(k * dt));
  }
  return y;
}

}  // namespace fradrc
