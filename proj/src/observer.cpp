#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

#include "fradrc/adrc.hpp"
#include "fradrc/error.hpp"

namespace fradrc {

namespace {

using FitKey = std::tuple<std::int64_t, std::int64_t, double, int, double, double>;

DigitalFilter cached_fit(const Rational& q, double fs, int order, Band band) {
  static std::mutex mu;
  static std::map<FitKey, DigitalFilter> cache;
  const FitKey key{q.num(), q.den(), fs, order, band.lo, band.hi};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  DigitalFilter f = iir_fit(-q.to_double(), fs, order, band);
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(f)).first->second;
}

}  // namespace

DigitalFilter integrator_filter(const Rational& q, const EsoConfig& cfg) {
  if (!(q > Rational(0))) throw OrderConstraint("observer state orders must be positive");
  if (q.is_integer()) return gl_inverse(q.to_double(), cfg.fs, static_cast<int>(q.num()) + 1);
  if (cfg.bank == FilterBank::GlOracle) return gl_inverse(q.to_double(), cfg.fs, cfg.gl_memory);
  return cached_fit(q, cfg.fs, cfg.filter_order, cfg.effective_band());
}

Observer::Observer(const EsoConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  for (const Rational& q : cfg_.q()) filters_.push_back(integrator_filter(q, cfg_));
  z_.assign(filters_.size(), 0.0);
}

void Observer::reset() {
  for (auto& f : filters_) f.reset();
  std::fill(z_.begin(), z_.end(), 0.0);
  poisoned_ = false;
}

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

const std::vector<double>& Observer::step(double u, double y) {
  const std::vector<double> no_gain(z_.size(), 0.0);
  solve(y, u, no_gain);
  return z_;
}

double Observer::step_coupled(double y, double offset, std::span<const double> gain) {
  if (gain.size() != z_.size()) throw InvalidArgument("observer: control gain size mismatch");
  return solve(y, offset, gain);
}

double Observer::solve(double y, double offset, std::span<const double> gain) {
  if (poisoned_) throw PoisonedState("observer saw a non-finite value; reset() required");
  if (!std::isfinite(offset) || !std::isfinite(y) || !all_finite(gain)) {
    poisoned_ = true;
    throw PoisonedState("observer: non-finite input");
  }
  const int n = static_cast<int>(filters_.size());
  const int ir = cfg_.input_row();
  // Unknowns [z; u]. rhs = M z + c with M = A - L C, c = B u + L y, and u = offset + gain . z.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) {
    if (i + 1 < n) M(i, i + 1) = 1.0;
    M(i, 0) -= cfg_.L[i];
    c[i] = cfg_.L[i] * y;
  }
  // Each filter output is affine in its input: z_i = g_i rhs_i + h_i.
  Eigen::VectorXd g(n), h(n);
  for (int i = 0; i < n; ++i) {
    g[i] = filters_[i].feedthrough();
    h[i] = filters_[i].free_response();
  }
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs(n + 1);
  lhs.topLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n) - g.asDiagonal() * M;
  lhs(ir, n) = -g[ir] * cfg_.b0;
  rhs.head(n) = g.asDiagonal() * c + h;
  for (int i = 0; i < n; ++i) lhs(n, i) = -gain[i];
  lhs(n, n) = 1.0;
  rhs[n] = offset;
  const Eigen::VectorXd x = lhs.partialPivLu().solve(rhs);
  const double u = x[n];
  Eigen::VectorXd drive = M * x.head(n) + c;
  drive[ir] += cfg_.b0 * u;
  for (int i = 0; i < n; ++i) z_[i] = x[i];
  if (!std::isfinite(u) || !all_finite(z_)) {
    poisoned_ = true;
    throw PoisonedState("observer: estimate became non-finite");
  }
  for (int i = 0; i < n; ++i) filters_[i].step(drive[i]);
  return u;
}

Observer build_observer(const EsoConfig& cfg) { return Observer(cfg); }

const std::vector<double>& observer_step(Observer& obs, double u, double y) { return obs.step(u, y); }

SimResult closed_loop_simulate(const PlantModel& p, const AdrcDesign& design, double ref,
                               const DisturbanceProfile& dist, double dt, double T) {
  p.validate();
  const int steps = grid_steps(dt, T);
  const EsoConfig& eso = design.eso;
  if (eso.m != p.order()) throw InvalidArgument("design order does not match plant order");
  if (std::fabs(eso.fs * dt - 1.0) > 1e-9)
    throw InvalidArgument("observer fs must equal 1/dt");
  if (!std::isfinite(ref)) throw InvalidArgument("reference must be finite");

  Observer obs(eso);
  PlantSimulator plant(p, dt);
  const int ns = eso.state_count();
  const double limit = 1e6 * (ref != 0.0 ? std::fabs(ref) : 1.0);
  const bool has_f = eso.variant != Variant::FO;

  SimResult res;
  res.z.assign(ns, {});
  const std::size_t cap = static_cast<std::size_t>(steps) + 1;
  for (auto* v : {&res.t, &res.r, &res.y, &res.u, &res.f_hat, &res.f_true, &res.d}) v->reserve(cap);
  for (auto& v : res.z) v.reserve(cap);

  double offset = 0.0;
  std::vector<double> gain;
  control_law_affine(ref, design.trk, eso.b0, ns, offset, gain);
  for (int k = 0; k <= steps; ++k) {
    const double t = k * dt;
    const double y = plant.output();
    if (!std::isfinite(y) || std::fabs(y) > limit) {
      res.diverged = true;
      break;
    }
    const double d = dist.at(t);
    double u = 0.0;
    try {
      u = obs.step_coupled(y, offset, gain);
    } catch (const PoisonedState&) {
      res.diverged = true;
      break;
    }
    const std::vector<double>* z = &obs.z();
    res.t.push_back(t);
    res.r.push_back(ref);
    res.y.push_back(y);
    res.u.push_back(u);
    for (int i = 0; i < ns; ++i) res.z[i].push_back((*z)[i]);
    res.f_hat.push_back(z->back());
    res.f_true.push_back(has_f ? plant.total_disturbance(u, eso.b0, d)
                               : std::numeric_limits<double>::quiet_NaN());
    res.d.push_back(d);
    plant.step(u, d);
  }
  return res;
}

}  // namespace fradrc
