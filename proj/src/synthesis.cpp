#include <cmath>
#include <string>

#include "fradrc/adrc.hpp"
#include "fradrc/error.hpp"

namespace fradrc {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::IO: return "io";
    case Variant::FO: return "fo";
    case Variant::IFO: return "ifo";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "io" || s == "IO") return Variant::IO;
  if (s == "fo" || s == "FO") return Variant::FO;
  if (s == "ifo" || s == "IFO") return Variant::IFO;
  throw InvalidArgument("unknown observer variant '" + s + "' (expected io, fo or ifo)");
}

AdrcOrders derive_orders(int m, const Rational& chi, const Rational& nu) {
  if (m < 2) throw OrderConstraint("plant order m must be >= 2");
  if (!(chi > Rational(1) && chi < Rational(2)))
    throw OrderConstraint("chi must satisfy 1 < chi < 2, got " + chi.str());
  AdrcOrders o;
  o.m = m;
  o.chi = chi;
  o.n = static_cast<int>((Rational(m) / chi).floor()) + 1;
  o.gamma = (Rational(m) - chi) / Rational(o.n - 1);
  o.nu = nu;
  if (nu < o.gamma || nu > chi)
    throw OrderConstraint("nu = " + nu.str() + " outside [gamma, chi] = [" + o.gamma.str() + ", " +
                          chi.str() + "]");
  if (nu == o.gamma) o.warnings.push_back("nu equals gamma; the observer theorem assumes gamma < nu");
  if (nu == chi) o.warnings.push_back("nu equals chi; the observer theorem assumes nu < chi");
  return o;
}

AdrcOrders derive_orders(int m, double chi, double nu) {
  return derive_orders(m, to_rational(chi), to_rational(nu));
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

std::vector<double> eso_gains(int state_count, double omega0) {
  if (state_count < 1) throw InvalidArgument("eso_gains: state_count must be >= 1");
  if (!(omega0 > 0.0) || !std::isfinite(omega0)) throw InvalidArgument("eso_gains: omega0 must be > 0");
  std::vector<double> L(state_count);
  for (int i = 1; i <= state_count; ++i) L[i - 1] = binomial(state_count, i) * std::pow(omega0, i);
  return L;
}

TrackingConfig tracking_gains(const AdrcOrders& o, double omega_c, double omega_g, KdFormula formula) {
  if (!(omega_c > 0.0) || !(omega_g > 0.0))
    throw InvalidArgument("tracking_gains: omega_c and omega_g must be > 0");
  TrackingConfig t;
  t.omega_c = omega_c;
  t.omega_g = omega_g;
  const int n = o.n;
  t.kp = std::pow(omega_g, o.chi.to_double()) * std::pow(omega_c, n - 1);
  for (int i = 1; i <= n - 1; ++i) {
    if (formula == KdFormula::Corrected)
      t.kd.push_back(binomial(n - 1, i - 1) * std::pow(omega_c, n - i));
    else
      t.kd.push_back(binomial(n - 1, i) * std::pow(omega_c, n - 1 - i));
  }
  return t;
}

TrackingConfig tracking_from_gains(const AdrcOrders& o, double kp, std::vector<double> kd) {
  if (!(kp > 0.0)) throw InvalidArgument("kp must be > 0");
  if (static_cast<int>(kd.size()) != o.n - 1)
    throw InvalidArgument("expected " + std::to_string(o.n - 1) + " kd gains");
  for (double v : kd)
    if (!(v > 0.0)) throw InvalidArgument("kd gains must be > 0");
  TrackingConfig t;
  t.kp = kp;
  t.kd = std::move(kd);
  t.omega_c = t.kd.back() / (o.n - 1);
  t.omega_g = std::pow(kp / std::pow(t.omega_c, o.n - 1), 1.0 / o.chi.to_double());
  return t;
}

int EsoConfig::state_count() const {
  switch (variant) {
    case Variant::IO: return m + 1;
    case Variant::FO: return 4;
    case Variant::IFO: return orders.n + 1;
  }
  return 0;
}

std::vector<Rational> EsoConfig::q() const {
  switch (variant) {
    case Variant::IO: return std::vector<Rational>(m + 1, Rational(1));
    case Variant::FO: return {orders.chi, fo_split, Rational(1) - fo_split, Rational(1)};
    case Variant::IFO: {
      std::vector<Rational> q{orders.chi};
      for (int i = 1; i < orders.n; ++i) q.push_back(orders.gamma);
      q.push_back(orders.nu);
      return q;
    }
  }
  return {};
}

Band EsoConfig::effective_band() const { return band.lo > 0.0 ? band : default_band(fs); }

void EsoConfig::validate() const {
  if (variant == Variant::FO && m != 2) throw Unsupported("FO observer is only defined for m = 2");
  if (m < 1) throw InvalidArgument("plant order must be >= 1");
  if (!(omega0 > 0.0) || !std::isfinite(omega0)) throw InvalidArgument("omega0 must be > 0");
  if (b0 == 0.0 || !std::isfinite(b0)) throw InvalidArgument("b0 must be finite and non-zero");
  if (!(fs > 0.0) || !std::isfinite(fs)) throw InvalidArgument("fs must be > 0");
  if (static_cast<int>(L.size()) != state_count())
    throw InvalidArgument("observer gain vector must have " + std::to_string(state_count()) + " entries");
  for (double v : L)
    if (!std::isfinite(v)) throw InvalidArgument("observer gains must be finite");
  if (filter_order < 1) throw InvalidArgument("filter_order must be >= 1");
  if (gl_memory < 2) throw InvalidArgument("gl_memory must be >= 2");
  if (variant == Variant::FO && !(fo_split > Rational(0) && fo_split < Rational(1)))
    throw OrderConstraint("FO split order must lie in (0, 1)");
  if (variant == Variant::IFO && orders.chi + Rational(orders.n - 1) * orders.gamma != Rational(orders.m))
    throw OrderConstraint("chi + (n-1) gamma must equal m");
}

EsoConfig make_ifo_eso(const AdrcOrders& o, double omega0, double b0, double fs) {
  EsoConfig c;
  c.variant = Variant::IFO;
  c.m = o.m;
  c.orders = o;
  c.omega0 = omega0;
  c.b0 = b0;
  c.L = eso_gains(o.n + 1, omega0);
  c.fs = fs;
  return c;
}

EsoConfig make_io_eso(int m, double omega0, double b0, double fs) {
  EsoConfig c;
  c.variant = Variant::IO;
  c.m = m;
  c.omega0 = omega0;
  c.b0 = b0;
  c.L = eso_gains(m + 1, omega0);
  c.fs = fs;
  return c;
}

EsoConfig make_fo_eso(int m, const Rational& chi, double omega0, double b0, double fs) {
  if (m != 2) throw Unsupported("FO observer is only defined for m = 2");
  if (!(chi > Rational(1) && chi < Rational(2))) throw OrderConstraint("chi must satisfy 1 < chi < 2");
  EsoConfig c;
  c.variant = Variant::FO;
  c.m = m;
  c.orders.m = m;
  c.orders.chi = chi;
  c.orders.n = 3;
  c.orders.gamma = chi - Rational(1);
  c.orders.nu = Rational(1);
  c.fo_split = chi - Rational(1);
  c.omega0 = omega0;
  c.b0 = b0;
  c.L = eso_gains(4, omega0);
  c.fs = fs;
  return c;
}

AdrcDesign make_io_design(int m, double omega0, double b0, double fs, double k_ip, double k_id) {
  AdrcDesign d;
  d.eso = make_io_eso(m, omega0, b0, fs);
  d.trk.kp = k_ip;
  d.trk.kd.assign(m - 1, 0.0);
  d.trk.kd[0] = k_ip * k_id;
  return d;
}

double control_law(std::span<const double> z, double r, const TrackingConfig& trk, double b0) {
  if (b0 == 0.0) throw InvalidArgument("control_law: b0 must be non-zero");
  if (z.size() < trk.kd.size() + 2) throw InvalidArgument("control_law: estimate too short for kd");
  double u0 = trk.kp * (r - z[0]);
  for (std::size_t i = 0; i < trk.kd.size(); ++i) u0 -= trk.kd[i] * z[i + 1];
  return (u0 - z.back()) / b0;
}

void control_law_affine(double r, const TrackingConfig& trk, double b0, int state_count,
                        double& offset, std::vector<double>& gain) {
  if (b0 == 0.0) throw InvalidArgument("control_law: b0 must be non-zero");
  if (static_cast<int>(trk.kd.size()) + 2 > state_count)
    throw InvalidArgument("control_law: estimate too short for kd");
  offset = trk.kp * r / b0;
  gain.assign(state_count, 0.0);
  gain[0] = -trk.kp / b0;
  for (std::size_t i = 0; i < trk.kd.size(); ++i) gain[i + 1] -= trk.kd[i] / b0;
  gain[state_count - 1] -= 1.0 / b0;
}

double io_control_law(std::span<const double> z, double r, double k_ip, double k_id, double b0) {
  if (b0 == 0.0) throw InvalidArgument("io_control_law: b0 must be non-zero");
  if (z.size() < 3) throw InvalidArgument("io_control_law: estimate needs 3 states");
  const double u0 = k_ip * (r - z[0]) - k_ip * k_id * z[1];
  return (u0 - z.back()) / b0;
}

}  // namespace fradrc
