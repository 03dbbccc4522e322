#include "fradrc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "fradrc/error.hpp"
#include "fradrc/grid.hpp"

namespace fradrc {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

double nearest_branch(double phase, double target) {
  return phase + 360.0 * std::round((target - phase) / 360.0);
}

double low_freq_phase(const FracRational& g) {
  const auto& n = g.num().terms();
  const auto& d = g.den().terms();
  if (n.empty() || d.empty()) return 0.0;
  const Term& tn = n.back();
  const Term& td = d.back();
  double ph = 90.0 * (tn.order - td.order).to_double();
  if (tn.coeff < 0) ph += 180.0;
  if (td.coeff < 0) ph -= 180.0;
  return ph;
}

double interp_cross(double t0, double y0, double t1, double y1, double level) {
  if (y1 == y0) return t1;
  return t0 + (level - y0) * (t1 - t0) / (y1 - y0);
}

}  // namespace

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

FreqGrid FreqGrid::make(double lo, double hi, int ppd) {
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) throw InvalidArgument("frequency grid needs 0 < lo < hi");
  if (ppd < 1) throw InvalidArgument("points per decade must be >= 1");
  FreqGrid g;
  g.lo = lo;
  g.hi = hi;
  g.points_per_decade = ppd;
  g.omegas = log_space(lo, hi, ppd);
  return g;
}

FreqGrid default_mse_grid() { return FreqGrid::make(0.1, 1e4, 100); }

std::vector<double> unwrapped_phase_deg(const FracRational& g, std::span<const double> omegas) {
  std::vector<double> out;
  out.reserve(omegas.size());
  double prev = low_freq_phase(g);
  for (double w : omegas) {
    const cdouble v = g.eval_jw(w);
    const double ph = nearest_branch(std::arg(v) * kDeg, prev);
    out.push_back(ph);
    prev = ph;
  }
  return out;
}

Margins margins(const FracRational& g, double lo, double hi, int ppd) {
  const auto grid = log_space(lo, hi, ppd);
  const auto phase = unwrapped_phase_deg(g, grid);
  auto lmag = [&](double w) { return std::log(std::abs(g.eval_jw(w))); };
  Margins m;
  double prev = lmag(grid[0]);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double cur = lmag(grid[k]);
    if (std::isfinite(prev) && std::isfinite(cur) && ((prev > 0) != (cur > 0))) {
      double a = grid[k - 1], b = grid[k], fa = prev;
      for (int it = 0; it < 100 && b / a > 1 + 1e-15; ++it) {
        const double mid = std::sqrt(a * b);
        const double fm = lmag(mid);
        if ((fm > 0) == (fa > 0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      const double wc = std::sqrt(a * b);
      const double ph = nearest_branch(std::arg(g.eval_jw(wc)) * kDeg, phase[k - 1]);
      m.crossings.push_back(wc);
      m.phase_margins.push_back(180.0 + ph);
    }
    prev = cur;
  }
  if (m.crossings.empty()) throw NotFound("no gain crossover in [" + fmt(lo) + ", " + fmt(hi) + "] rad/s");
  m.omega_gc = m.crossings.front();
  m.phase_margin = m.phase_margins.front();
  m.multiple = m.crossings.size() > 1;
  return m;
}

MseResult mse_delta(const FracRational& P, double ideal_order, const FreqGrid& grid) {
  if (grid.omegas.empty()) throw InvalidArgument("mse_delta: empty grid");
  MseResult r;
  r.omegas = grid.omegas;
  const auto& w = grid.omegas;
  const std::size_t n = w.size();
  double sum = 0.0, wsum = 0.0;
  std::size_t k = 0;
  for (const FreqPoint& fp : freq_response(P, w)) {
    const cdouble jw_a = std::polar(std::pow(fp.omega, ideal_order), ideal_order * std::numbers::pi / 2);
    const cdouble d = 1.0 - jw_a * fp.value;
    if (!fp.defined || !std::isfinite(d.real()) || !std::isfinite(d.imag())) {
      ++r.excluded;
      r.delta.emplace_back(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN());
      ++k;
      continue;
    }
    r.delta.push_back(d);
    // Trapezoid weight in log(omega): the plain mean over-counts the end points by O(1/n).
    double wt = 1.0;
    if (n > 1) {
      const double lo = std::log(w[k == 0 ? 0 : k - 1]), hi = std::log(w[k + 1 == n ? k : k + 1]);
      wt = 0.5 * (hi - lo);
    }
    sum += wt * std::norm(d);
    wsum += wt;
    ++k;
  }
  if (r.excluded * 100 > static_cast<int>(n))
    throw NumericalFailure("mse_delta: " + std::to_string(r.excluded) + " of " + std::to_string(n) +
                           " grid points undefined");
  r.mse = sum / wsum;
  return r;
}

StepMetrics step_metrics(const SimResult& sim, double r, const DisturbanceProfile& dist, double band) {
  if (r == 0.0 || !std::isfinite(r)) throw InvalidArgument("step_metrics: reference must be non-zero");
  if (!(band > 0.0 && band < 1.0)) throw InvalidArgument("step_metrics: band must lie in (0, 1)");
  const std::size_t n = sim.samples();
  if (n < 20) throw InvalidArgument("step_metrics: simulation too short");
  if (sim.diverged) throw NumericalFailure("step_metrics: simulation diverged");
  const double inf = std::numeric_limits<double>::infinity();
  const double ar = std::fabs(r);
  const auto& t = sim.t;
  const auto& y = sim.y;

  std::size_t pre = n;
  if (dist.kind == DisturbanceProfile::Kind::Step)
    pre = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), dist.t_on - 1e-12) - t.begin());
  if (pre < 20) throw InvalidArgument("step_metrics: too few samples before the disturbance");

  StepMetrics m;
  const std::size_t tail = std::max<std::size_t>(1, pre / 20);
  double acc = 0.0;
  for (std::size_t k = pre - tail; k < pre; ++k) acc += y[k];
  m.y_ss = acc / static_cast<double>(tail);

  std::size_t ipk = 0;
  for (std::size_t k = 0; k < pre; ++k)
    if (y[k] > y[ipk]) ipk = k;
  m.y_max = y[ipk];
  m.peak_time = t[ipk] - t[0];
  m.overshoot = std::max(0.0, 100.0 * (m.y_max - m.y_ss) / ar);
  m.steady_state_error = 100.0 * std::fabs(r - m.y_ss) / ar;

  // 10-90% of the move from y[0] to y_ss.
  const double y0 = y[0], span = m.y_ss - y0;
  auto first_cross = [&](double frac) {
    const double level = y0 + frac * span;
    for (std::size_t k = 1; k < pre; ++k)
      if ((y[k] - level) * (span > 0 ? 1 : -1) >= 0) return interp_cross(t[k - 1], y[k - 1], t[k], y[k], level);
    return inf;
  };
  m.rise_time = span == 0.0 ? 0.0 : first_cross(0.9) - first_cross(0.1);

  const double tol = band * ar;
  std::size_t last_out = n;  // sentinel: never outside
  for (std::size_t k = 0; k < pre; ++k)
    if (std::fabs(y[k] - m.y_ss) > tol) last_out = k;
  if (last_out == n) {
    m.settling_time = 0.0;
  } else if (last_out + 1 >= pre) {
    m.settled = false;
  } else {
    const double level = m.y_ss + (y[last_out] > m.y_ss ? tol : -tol);
    m.settling_time = interp_cross(t[last_out], y[last_out], t[last_out + 1], y[last_out + 1], level) - t[0];
    // Held for at least 10% of the pre-disturbance window.
    if (t[pre - 1] - (t[0] + m.settling_time) < 0.1 * (t[pre - 1] - t[0])) m.settled = false;
  }
  if (!m.settled) m.settling_time = inf;

  if (pre < n) {
    std::size_t out = n;
    for (std::size_t k = pre; k < n; ++k) {
      const double dev = std::fabs(y[k] - m.y_ss);
      m.dist_max_deviation = std::max(m.dist_max_deviation, dev);
      if (dev > tol) out = k;
    }
    if (out == n)
      m.dist_recovery_time = 0.0;
    else if (out + 1 >= n)
      m.recovered = false;
    else
      m.dist_recovery_time = t[out + 1] - t[pre];
    if (!m.recovered) m.dist_recovery_time = inf;
  }
  return m;
}

double overshoot_fluctuation(const std::map<double, StepMetrics>& by_k, double reference) {
  if (by_k.empty()) throw InvalidArgument("overshoot_fluctuation: no gain multipliers");
  if (reference == 0.0) throw InvalidArgument("overshoot_fluctuation: reference must be non-zero");
  double hi = -std::numeric_limits<double>::infinity(), lo = -hi;
  for (const auto& [k, m] : by_k) {
    hi = std::max(hi, m.y_max);
    lo = std::min(lo, m.y_max);
  }
  return (hi - lo) / std::fabs(reference) * 100.0;
}

AdrcDesign scale_gain(const AdrcDesign& d, double K) {
  if (!(K > 0.0)) throw InvalidArgument("gain multiplier must be > 0");
  AdrcDesign s = d;
  s.trk.kp *= K;
  if (d.eso.variant == Variant::IO)
    for (double& v : s.trk.kd) v *= K;
  return s;
}

void write_bode_csv(std::ostream& os, const FracRational& g, std::span<const double> omegas) {
  const auto ph = unwrapped_phase_deg(g, omegas);
  os << "omega,mag_db,phase_deg\n";
  for (std::size_t k = 0; k < omegas.size(); ++k)
    os << fmt(omegas[k]) << ',' << fmt(20.0 * std::log10(std::abs(g.eval_jw(omegas[k])))) << ','
       << fmt(ph[k]) << '\n';
}

void write_delta_csv(std::ostream& os, const MseResult& r) {
  os << "omega,re,im,abs2\n";
  for (std::size_t k = 0; k < r.omegas.size(); ++k)
    os << fmt(r.omegas[k]) << ',' << fmt(r.delta[k].real()) << ',' << fmt(r.delta[k].imag()) << ','
       << fmt(std::norm(r.delta[k])) << '\n';
}

void write_metrics(std::ostream& os, const StepMetrics& m) {
  os << "rise_time=" << fmt(m.rise_time) << '\n'
     << "peak_time=" << fmt(m.peak_time) << '\n'
     << "overshoot=" << fmt(m.overshoot) << '\n'
     << "settling_time=" << fmt(m.settling_time) << '\n'
     << "steady_state_error=" << fmt(m.steady_state_error) << '\n'
     << "y_max=" << fmt(m.y_max) << '\n'
     << "y_ss=" << fmt(m.y_ss) << '\n'
     << "dist_max_deviation=" << fmt(m.dist_max_deviation) << '\n'
     << "dist_recovery_time=" << fmt(m.dist_recovery_time) << '\n';
}

}  // namespace fradrc
