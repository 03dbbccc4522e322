#include "fradrc/adrc.hpp"
#include "fradrc/error.hpp"

namespace fradrc {

namespace {

using Matrix = std::vector<std::vector<FracPoly>>;

FracPoly s_pow(const Rational& q, double c = 1.0) { return FracPoly::monomial(c, q); }
FracPoly cst(double c) { return FracPoly::constant(c); }

// Phi_i = s^{chi+(i-1)gamma} + sum_{j=1..i} beta_j s^{(i-j)gamma}, so that E_{i+1} = Phi_i E_1.
FracPoly phi(const AdrcOrders& o, const std::vector<double>& beta, int i) {
  FracPoly p = s_pow(o.chi + Rational(i - 1) * o.gamma);
  for (int j = 1; j <= i; ++j) p = p + s_pow(Rational(i - j) * o.gamma, beta[j - 1]);
  return p;
}

// s^chi (s^{(n-1)gamma} + sum kd_i s^{(i-1)gamma}) + kp
FracPoly tracking_poly(const AdrcOrders& o, const TrackingConfig& trk) {
  FracPoly inner = s_pow(Rational(o.n - 1) * o.gamma);
  for (int i = 1; i <= o.n - 1; ++i) inner = inner + s_pow(Rational(i - 1) * o.gamma, trk.kd[i - 1]);
  return inner.shifted(o.chi) + cst(trk.kp);
}

FracPoly plant_a(const PlantModel& p) {
  FracPoly a;
  for (int i = 0; i < p.order(); ++i) a = a + s_pow(Rational(i), p.a[i]);
  return a;
}

void require_ifo(const AdrcDesign& d) {
  if (d.eso.variant != Variant::IFO) throw Unsupported("loop blocks are defined for the IFO design only");
  d.eso.validate();
  if (static_cast<int>(d.trk.kd.size()) != d.eso.orders.n - 1)
    throw InvalidArgument("IFO design needs n - 1 kd gains");
}

// Cumulative derivative order carried by each observer state: 0, q_1, q_1 + q_2, ...
std::vector<Rational> state_orders(const EsoConfig& cfg) {
  std::vector<Rational> o{Rational(0)};
  const auto q = cfg.q();
  for (std::size_t i = 0; i + 1 < q.size(); ++i) o.push_back(o.back() + q[i]);
  return o;
}

Matrix observer_matrix(const EsoConfig& cfg) {
  const auto q = cfg.q();
  const int n = static_cast<int>(q.size());
  Matrix k(n, std::vector<FracPoly>(n));
  for (int i = 0; i < n; ++i) {
    k[i][i] = s_pow(q[i]);
    if (i + 1 < n) k[i][i + 1] = cst(-1.0);
    k[i][0] = k[i][0] + cst(cfg.L[i]);
  }
  return k;
}

Matrix replace_column(Matrix m, int col, const std::vector<FracPoly>& v) {
  for (std::size_t i = 0; i < m.size(); ++i) m[i][col] = v[i];
  return m;
}

// Unknowns [Y, U, Z_1..Z_N]; rows: plant, observer states, control law.
Matrix interconnection(const PlantModel& p, const AdrcDesign& d, bool with_kp_feedback) {
  const EsoConfig& e = d.eso;
  const int ns = e.state_count();
  const int dim = ns + 2;
  Matrix m(dim, std::vector<FracPoly>(dim));
  m[0][0] = p.denominator();
  m[0][1] = cst(-p.b);
  const Matrix k = observer_matrix(e);
  for (int i = 0; i < ns; ++i) {
    m[1 + i][0] = cst(-e.L[i]);
    if (i == e.input_row()) m[1 + i][1] = cst(-e.b0);
    for (int j = 0; j < ns; ++j) m[1 + i][2 + j] = k[i][j];
  }
  FracPoly* row = m[dim - 1].data();
  row[1] = cst(e.b0);
  if (with_kp_feedback) row[2] = cst(d.trk.kp);
  for (std::size_t j = 0; j < d.trk.kd.size(); ++j) row[3 + j] = row[3 + j] + cst(d.trk.kd[j]);
  row[2 + ns - 1] = row[2 + ns - 1] + cst(1.0);
  return m;
}

}  // namespace

LoopBlocks loop_blocks(const PlantModel& p, const AdrcDesign& d) {
  require_ifo(d);
  const AdrcOrders& o = d.eso.orders;
  const auto& beta = d.eso.L;
  FracPoly gm = cst(d.trk.kp) + phi(o, beta, o.n);
  for (int i = 1; i <= o.n - 1; ++i) gm = gm + phi(o, beta, i).scaled(d.trk.kd[i - 1]);
  const FracPoly lambda = observer_char_poly(d.eso);
  LoopBlocks b;
  b.Gm = FracRational::from_poly(gm);
  b.Gn = FracRational(cst(1.0), tracking_poly(o, d.trk));
  b.Hm = FracRational(cst(-1.0), lambda);
  b.Hn = FracRational::from_poly(-plant_a(p).shifted(o.nu));
  return b;
}

FracRational approx_open_loop(const AdrcDesign& d) {
  const EsoConfig& e = d.eso;
  if (e.variant == Variant::IO) {
    FracPoly num = cst(d.trk.kp);
    for (std::size_t i = 0; i < d.trk.kd.size(); ++i) num = num + s_pow(Rational(static_cast<std::int64_t>(i) + 1), d.trk.kd[i]);
    return FracRational(num, s_pow(Rational(e.m)));
  }
  // u0 = kp e0 - sum kd_i z_{i+1} with z tracking the ideal chain.
  const auto so = state_orders(e);
  const Rational top = e.variant == Variant::IFO ? Rational(e.m) : so.back();
  FracPoly den = s_pow(top);
  for (std::size_t i = 0; i < d.trk.kd.size(); ++i) den = den + s_pow(so[i + 1], d.trk.kd[i]);
  return FracRational(cst(d.trk.kp), den);
}

OpenLoop open_loop_tf(const PlantModel& p, const AdrcDesign& d) {
  require_ifo(d);
  const AdrcOrders& o = d.eso.orders;
  const FracPoly lambda = observer_char_poly(d.eso);
  const FracPoly sa = plant_a(p).shifted(o.nu);
  const LoopBlocks b = loop_blocks(p, d);
  const FracPoly dn = tracking_poly(o, d.trk);
  const FracPoly kp = cst(d.trk.kp);
  // Z1/E0 = kp (1 + Ho) / (1/Gn - kp + (Gm - kp) Ho), Ho = s^nu A / lambda.
  OpenLoop ol;
  ol.exact = FracRational((lambda + sa).scaled(d.trk.kp), (dn - kp) * lambda + (b.Gm.num() - kp) * sa);

  const double wc = d.trk.omega_c;
  if (!(wc > 0.0)) throw InvalidArgument("open_loop_tf: omega_c must be > 0");
  FracPoly filt = cst(1.0);
  const FracPoly stage = s_pow(o.gamma, 1.0 / wc) + cst(1.0);
  for (int i = 0; i < o.n - 1; ++i) filt = filt * stage;
  double gain = d.trk.kp;
  for (int i = 0; i < o.n - 1; ++i) gain /= wc;
  ol.approx = FracRational(cst(gain), filt.shifted(o.chi));
  return ol;
}

FracRational open_loop_generic(const PlantModel& p, const AdrcDesign& d) {
  d.eso.validate();
  const Matrix m = interconnection(p, d, false);
  std::vector<FracPoly> e(m.size());
  e.back() = cst(d.trk.kp);
  return FracRational(fp_det(replace_column(m, 2, e)), fp_det(m));
}

FracPoly observer_char_poly(const EsoConfig& cfg) {
  cfg.validate();
  return fp_det(observer_matrix(cfg));
}

EsoTransfer eso_transfer(const EsoConfig& cfg, const PlantModel& p) {
  cfg.validate();
  p.validate();
  if (cfg.m != p.order()) throw InvalidArgument("observer order does not match plant order");
  const Matrix k = observer_matrix(cfg);
  const int n = static_cast<int>(k.size());
  const FracPoly den = fp_det(k);
  std::vector<FracPoly> bu(n), ly(n);
  bu[cfg.input_row()] = cst(cfg.b0);
  for (int i = 0; i < n; ++i) ly[i] = cst(cfg.L[i]);
  const FracPoly nu = fp_det(replace_column(k, n - 1, bu));
  const FracPoly ny = fp_det(replace_column(k, n - 1, ly));
  const FracPoly ap = p.denominator();
  EsoTransfer t;
  t.u_to_f = FracRational(nu, den);
  t.y_to_f = FracRational(ny, den);
  // y = G u, u = (u0 - Tu u - Ty y) / b0.
  t.P = FracRational(den.scaled(p.b), den.scaled(cfg.b0) * ap + nu * ap + ny.scaled(p.b));
  return t;
}

FracPoly closed_loop_char_poly_generic(const PlantModel& p, const AdrcDesign& d) {
  d.eso.validate();
  p.validate();
  if (d.eso.m != p.order()) throw InvalidArgument("design order does not match plant order");
  return fp_det(interconnection(p, d, true));
}

}  // namespace fradrc
