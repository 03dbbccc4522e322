#include "fradrc/stability.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "fradrc/error.hpp"

namespace fradrc {

namespace {

constexpr double kSectorTol = 1e-9;
constexpr double kResidualTol = 1e-6;

std::vector<double> trim_leading(std::span<const double> c) {
  std::size_t i = 0;
  while (i < c.size() && c[i] == 0.0) ++i;
  return {c.begin() + static_cast<std::ptrdiff_t>(i), c.end()};
}

std::vector<double> derivative(const std::vector<double>& c) {
  const int n = static_cast<int>(c.size()) - 1;
  std::vector<double> d;
  for (int k = 0; k < n; ++k) d.push_back(c[k] * (n - k));
  return d;
}

cdouble horner(const std::vector<double>& c, cdouble x) {
  cdouble v = 0.0;
  for (double a : c) v = v * x + a;
  return v;
}

double abs_horner(const std::vector<double>& c, double ax) {
  double v = 0.0;
  for (double a : c) v = v * ax + std::fabs(a);
  return v;
}

double backward_error(const std::vector<double>& c, cdouble x) {
  const double scale = abs_horner(c, std::abs(x));
  return scale > 0.0 ? std::abs(horner(c, x)) / scale : 0.0;
}

void balance(Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  bool done = false;
  while (!done) {
    done = true;
    for (int i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::fabs(a(j, i));
        r += std::fabs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      while (c < r / 2) { c *= 2; r /= 2; f *= 2; }
      while (c >= r * 2) { c /= 2; r *= 2; f /= 2; }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

cdouble newton_polish(const std::vector<double>& c, cdouble x) {
  const auto dc = derivative(c);
  double best = std::abs(horner(c, x));
  for (int it = 0; it < 20; ++it) {
    const cdouble d = horner(dc, x);
    if (d == 0.0) break;
    const cdouble nx = x - horner(c, x) / d;
    const double nv = std::abs(horner(c, nx));
    if (!(nv < best)) break;
    best = nv;
    x = nx;
    if (best == 0.0) break;
  }
  return x;
}

// A cluster of k nearby roots is replaced by one k-fold root when the polynomial and
// its first k-1 derivatives all vanish there to rounding level. The centre is refined on
// P^{(k-1)}, where a true k-fold root is simple and well conditioned.
void refine_clusters(const std::vector<double>& c, std::vector<cdouble>& roots) {
  const std::size_t n = roots.size();
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] >= 0) continue;
    label[i] = next;
    std::vector<std::size_t> stack{i};
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < n; ++b) {
        if (label[b] >= 0) continue;
        if (std::abs(roots[a] - roots[b]) <= 1e-2 * std::max(1.0, std::abs(roots[a]))) {
          label[b] = next;
          stack.push_back(b);
        }
      }
    }
    ++next;
  }
  for (int g = 0; g < next; ++g) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (label[i] == g) idx.push_back(i);
    const int k = static_cast<int>(idx.size());
    if (k < 2) continue;
    cdouble centre = 0.0;
    for (auto i : idx) centre += roots[i];
    centre /= static_cast<double>(k);
    std::vector<std::vector<double>> ders{c};
    for (int j = 1; j < k; ++j) ders.push_back(derivative(ders.back()));
    centre = newton_polish(ders.back(), centre);
    bool multiple = true;
    for (int j = 0; j < k && multiple; ++j) multiple = backward_error(ders[j], centre) < 1e-10;
    if (!multiple) continue;
    for (auto i : idx) roots[i] = centre;
  }
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::Unstable: return "unstable";
    case Verdict::Marginal: return "marginal";
    case Verdict::Indeterminate: return "indeterminate";
  }
  return "?";
}

LambdaConvention parse_lambda_convention(const std::string& s) {
  if (s == "lcm") return LambdaConvention::Lcm;
  if (s == "paper") return LambdaConvention::Paper;
  throw InvalidArgument("lambda convention must be 'paper' or 'lcm', got '" + s + "'");
}

FracPoly char_poly_eso(const AdrcOrders& o, std::span<const double> L) {
  if (static_cast<int>(L.size()) != o.n + 1)
    throw InvalidArgument("char_poly_eso: expected n + 1 gains");
  std::vector<Term> t{{1.0, Rational(o.n - 1) * o.gamma + o.chi + o.nu}};
  for (int i = 1; i <= o.n; ++i) t.push_back({L[i - 1], Rational(o.n - i) * o.gamma + o.nu});
  t.push_back({L[o.n], Rational(0)});
  return FracPoly(std::move(t));
}

FracPoly char_poly_closed_s(const PlantModel& p, const AdrcDesign& d) {
  p.validate();
  if (std::fabs(p.b - d.eso.b0) > 1e-12 * std::fabs(p.b))
    throw PreconditionError("closed-loop characteristic polynomial requires b == b0 (b = " +
                            std::to_string(p.b) + ", b0 = " + std::to_string(d.eso.b0) + ")");
  if (d.eso.variant != Variant::IFO) return closed_loop_char_poly_generic(p, d);
  const LoopBlocks b = loop_blocks(p, d);
  // 1 + G_o H_o = 0 with G_o = G_m G_n and H_o = H_m H_n = s^nu A / lambda.
  return b.Gn.den() * b.Hm.den() - b.Gm.num() * b.Hn.num();
}

Rational base_order(const AdrcDesign& d, LambdaConvention conv) {
  const auto q = d.eso.q();
  if (conv == LambdaConvention::Lcm) {
    std::int64_t l = 1;
    for (const auto& r : q) l = lcm64(l, r.den());
    return Rational(1, l);
  }
  std::int64_t prod = q[0].den() * q[1].den() * q.back().den();
  return Rational(1, prod);
}

CommensuratePoly to_commensurate(const FracPoly& p, const Rational& lambda) {
  if (!(lambda > Rational(0)) || lambda > Rational(1))
    throw InvalidArgument("lambda must lie in (0, 1]");
  CommensuratePoly cp;
  cp.coeffs = trim_leading(commensurate(p, lambda));
  if (cp.coeffs.empty()) throw DegenerateSystem("zero characteristic polynomial");
  cp.lambda = lambda;
  return cp;
}

CommensuratePoly char_poly_closed(const PlantModel& p, const AdrcDesign& d, LambdaConvention conv) {
  return to_commensurate(char_poly_closed_s(p, d), base_order(d, conv));
}

CommensuratePoly char_poly_observer(const EsoConfig& cfg, LambdaConvention conv) {
  AdrcDesign d;
  d.eso = cfg;
  return to_commensurate(observer_char_poly(cfg), base_order(d, conv));
}

std::vector<cdouble> poly_roots(std::span<const double> coeffs_desc, double* residual) {
  std::vector<double> c = trim_leading(coeffs_desc);
  if (c.size() < 2) throw InvalidArgument("poly_roots: degree must be >= 1");
  for (double v : c)
    if (!std::isfinite(v)) throw InvalidArgument("poly_roots: non-finite coefficient");
  std::vector<cdouble> roots;
  while (c.size() > 1 && c.back() == 0.0) {
    c.pop_back();
    roots.emplace_back(0.0, 0.0);
  }
  double worst = 0.0;
  const int n = static_cast<int>(c.size()) - 1;
  if (n >= 1) {
    // Monic, then w = rho v so that the constant term has unit magnitude.
    const double rho = std::pow(std::fabs(c[n] / c[0]), 1.0 / n);
    std::vector<double> d(c.size());
    double sc = 1.0;
    for (int k = 0; k <= n; ++k) {
      d[k] = c[k] / c[0] / sc;
      sc *= rho;
    }
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) comp(0, k) = -d[k + 1];
    for (int k = 1; k < n; ++k) comp(k, k - 1) = 1.0;
    balance(comp);
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    if (es.info() != Eigen::Success) throw NumericalFailure("poly_roots: eigenvalue iteration failed");
    std::vector<cdouble> v;
    for (int k = 0; k < n; ++k) v.push_back(newton_polish(d, es.eigenvalues()[k]));
    refine_clusters(d, v);
    for (const cdouble& x : v) {
      worst = std::max(worst, backward_error(d, x));
      roots.push_back(x * rho);
    }
  }
  if (residual) *residual = worst;
  return roots;
}

StabilityReport sector_check(const CommensuratePoly& cp) {
  const std::vector<double> c = trim_leading(cp.coeffs);
  if (c.size() < 2) throw InvalidArgument("sector_check: degree must be >= 1");
  const int n = static_cast<int>(c.size()) - 1;
  StabilityReport rep;
  rep.lambda = cp.lambda;
  rep.degree = n;

  // P(w) = R(w^g) when every exponent is a multiple of g.
  std::int64_t g = 0;
  double cmax = 0.0, cmin = INFINITY;
  for (int k = 0; k <= n; ++k) {
    if (c[k] == 0.0) continue;
    g = gcd64(g, n - k);
    cmax = std::max(cmax, std::fabs(c[k]));
    cmin = std::min(cmin, std::fabs(c[k]));
  }
  if (g == 0) g = n;
  rep.stride = static_cast<int>(g);
  std::vector<double> r;
  for (int k = 0; k <= n; k += static_cast<int>(g)) r.push_back(c[k]);
  rep.condition_warning = (n / g) > 60 || cmax / cmin > 1e12;

  double residual = 0.0;
  const auto vroots = poly_roots(r, &residual);
  rep.residual = residual;
  const double half = (cp.lambda * Rational(g)).to_double() * std::numbers::pi / 2;
  double margin = INFINITY;
  for (const cdouble& v : vroots) {
    const double a = std::abs(v) == 0.0 ? 0.0 : std::fabs(std::arg(v));
    const double mv = std::abs(v) == 0.0 ? 0.0 : (a - half) / static_cast<double>(g);
    margin = std::min(margin, mv);
    const double mag = std::pow(std::abs(v), 1.0 / static_cast<double>(g));
    for (std::int64_t k = 0; k < g; ++k)
      rep.roots.push_back(std::polar(mag, (std::arg(v) + 2 * std::numbers::pi * static_cast<double>(k)) /
                                              static_cast<double>(g)));
  }
  rep.min_arg_margin = margin;
  if (!(residual <= kResidualTol))
    rep.verdict = Verdict::Indeterminate;
  else if (margin > kSectorTol)
    rep.verdict = Verdict::Stable;
  else if (margin < -kSectorTol)
    rep.verdict = Verdict::Unstable;
  else
    rep.verdict = Verdict::Marginal;
  return rep;
}

std::vector<std::vector<double>> kharitonov_eso(std::span<const double> beta) {
  const int n = static_cast<int>(beta.size()) - 1;
  if (n < 1) throw InvalidArgument("kharitonov_eso: need at least two gains");
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += beta[i];
  std::vector<double> p3{1.0};
  for (int i = 0; i <= n; ++i) p3.push_back(beta[i]);
  return {{1.0, sum + beta[n]}, {1.0, sum, beta[n]}, p3};
}

std::vector<std::vector<double>> kharitonov_closed2(const Closed2Params& q) {
  const double a0 = q.a0, a1 = q.a1, kp = q.kp, kd = q.kd1, w = q.omega0;
  const double w2 = w * w, w3 = w2 * w;
  std::vector<double> A{
      1 + kd + 3 * w + 3 * kd * w,
      a1 + a1 * kd,
      a0 + a0 * kd + kp + 3 * kp * w + 3 * w2 + 3 * kd * w2 + w3 + kd * w3,
      a1 * kp + 3 * a1 * w + 3 * a1 * kd * w + 3 * a1 * w2,
      a0 * kp + 3 * a0 * w + 3 * a0 * kd * w + 3 * a0 * w2 + 3 * kp * w2 + kp * w3,
  };
  std::vector<double> B{
      1 + kd,
      a1 + a1 * kd + 3 * w + 3 * kd * w,
      a0 + a0 * kd + kp + 3 * w2 + 3 * kd * w2,
      a1 * kp + 3 * a1 * w + 3 * a1 * kd * w + 3 * kp * w + 3 * a1 * w2 + w3 + kd * w3,
      a0 * kp + 3 * a0 * w + 3 * a0 * kd * w + 3 * a0 * w2 + 3 * kp * w2,
      kp * w3,
  };
  std::vector<double> C{
      1,
      a1 + kd + 3 * w,
      a0 + a1 * kd + kp + 3 * a1 * w + 3 * kd * w + 3 * w2,
      a0 * kd + a1 * kp + 3 * a0 * w + 3 * a1 * kd * w + 3 * kp * w + 3 * a1 * w2 + 3 * kd * w2 + w3,
      a0 * kp + 3 * a0 * kd * w + 3 * a0 * w2 + 3 * kp * w2 + kd * w3,
      kp * w3,
  };
  return {A, B, C};
}

RouthResult routh_table(std::span<const double> coeffs_desc) {
  std::vector<double> c = trim_leading(coeffs_desc);
  if (c.size() < 2) throw InvalidArgument("routh_table: degree must be >= 1");
  if (c[0] < 0)
    for (double& v : c) v = -v;
  const int n = static_cast<int>(c.size()) - 1;
  const int width = n / 2 + 1;
  double scale = 0.0;
  for (double v : c) scale = std::max(scale, std::fabs(v));
  const double eps = 1e-12 * scale;

  RouthResult res;
  std::vector<double> r0(width, 0.0), r1(width, 0.0);
  for (int k = 0; k <= n; ++k) (k % 2 == 0 ? r0 : r1)[k / 2] = c[k];
  res.rows.push_back(r0);
  res.rows.push_back(r1);
  for (int i = 2; i <= n; ++i) {
    auto& prev = res.rows[i - 1];
    const auto& pp = res.rows[i - 2];
    bool all_zero = std::all_of(prev.begin(), prev.end(), [](double v) { return v == 0.0; });
    if (all_zero) {
      // Auxiliary polynomial from row i-2 has degree n - i + 2 with even steps.
      res.zero_row = true;
      const int deg = n - (i - 2);
      for (int k = 0; k < width; ++k) {
        const int power = deg - 2 * k;
        prev[k] = power > 0 ? pp[k] * power : 0.0;
      }
    }
    if (prev[0] == 0.0) {
      res.epsilon_used = true;
      prev[0] = eps > 0 ? eps : 1e-300;
    }
    std::vector<double> row(width, 0.0);
    for (int k = 0; k + 1 < width; ++k) row[k] = (prev[0] * pp[k + 1] - pp[0] * prev[k + 1]) / prev[0];
    res.rows.push_back(row);
  }
  bool positive = true;
  for (int i = 0; i <= n; ++i) {
    const double v = res.rows[i][0];
    res.first_column.push_back(v);
    if (!(v > 0.0)) positive = false;
    if (i > 0 && (v > 0) != (res.first_column[i - 1] > 0)) ++res.sign_changes;
  }
  res.hurwitz = positive && !res.epsilon_used && !res.zero_row;
  return res;
}

double find_omega0(const PlantModel& p, double kp, double kd1, double lo, double hi) {
  p.validate();
  if (p.order() != 2) throw PreconditionError("find_omega0 requires a second-order plant");
  if (p.a[0] < 0) throw PreconditionError("find_omega0 requires a0 >= 0");
  if (p.a[1] < 0) throw PreconditionError("find_omega0 requires a1 >= 0");
  if (!(kp > 0)) throw PreconditionError("find_omega0 requires kp > 0");
  if (!(kd1 > 8)) throw PreconditionError("find_omega0 requires kd1 > 8");
  if (!(lo > 0) || !(hi > lo)) throw InvalidArgument("find_omega0: need 0 < lo < hi");

  auto ok = [&](double w) {
    for (const auto& poly : kharitonov_closed2({p.a[0], p.a[1], kp, kd1, w}))
      if (!routh_table(poly).hurwitz) return false;
    return true;
  };
  std::vector<double> grid;
  for (double w = lo; w <= hi * (1 + 1e-12); w *= 1.2) grid.push_back(w);
  std::vector<bool> pass;
  for (double w : grid) pass.push_back(ok(w));
  // First index after which every grid point passes.
  int first = static_cast<int>(grid.size());
  while (first > 0 && pass[first - 1]) --first;
  if (first == static_cast<int>(grid.size())) throw NotFound("no omega0 in range makes all boundaries Hurwitz");
  if (first == 0) return grid[0];
  double a = grid[first - 1], b = grid[first];
  for (int it = 0; it < 60 && b / a > 1 + 1e-12; ++it) {
    const double mid = std::sqrt(a * b);
    (ok(mid) ? b : a) = mid;
  }
  return b;
}

void write_report_csv(std::ostream& os, const StabilityReport& r) {
  os << "re,im,abs_arg,margin\n";
  const double half = r.lambda.to_double() * std::numbers::pi / 2;
  char buf[160];
  for (const cdouble& w : r.roots) {
    const double a = std::fabs(std::arg(w));
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n", w.real(), w.imag(), a, a - half);
    os << buf;
  }
}

void write_report_json(std::ostream& os, const StabilityReport& r) {
  nlohmann::ordered_json j;
  j["verdict"] = to_string(r.verdict);
  j["min_arg_margin"] = r.min_arg_margin;
  j["lambda"] = r.lambda.str();
  j["degree"] = r.degree;
  j["stride"] = r.stride;
  j["residual"] = r.residual;
  j["condition_warning"] = r.condition_warning;
  auto roots = nlohmann::json::array();
  for (const cdouble& w : r.roots) roots.push_back({w.real(), w.imag()});
  j["roots"] = roots;
  os << j.dump(2) << "\n";
}

}  // namespace fradrc
