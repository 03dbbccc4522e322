#include "fradrc/discretize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "fradrc/error.hpp"
#include "fradrc/gl.hpp"
#include "fradrc/grid.hpp"

namespace fradrc {
namespace {

using cd = std::complex<double>;

std::vector<double> reversed_tail(const std::vector<double>& c) {
  // c_L .. c_1
  std::vector<double> out;
  for (std::size_t j = c.size(); j-- > 1;) out.push_back(c[j]);
  return out;
}

std::vector<double> convolve(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> out(x.size() + y.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) out[i + j] += x[i] * y[j];
  return out;
}

cd poly_zinv(const std::vector<double>& c, cd zinv) {
  // c_0 + c_1 z^-1 + ... via Horner in z^-1
  cd acc{0.0, 0.0};
  for (std::size_t j = c.size(); j-- > 0;) acc = acc * zinv + c[j];
  return acc;
}

}  // namespace

// ---------------------------------------------------------------- delay lines

double DigitalFilter::Line::dot(const std::vector<double>& rev) const {
  if (n == 0) return 0.0;
  const double* p = buf.data() + head + 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += rev[i] * p[i];
  return acc;
}

void DigitalFilter::Line::push(double v) {
  if (n == 0) return;
  head = head + 1 == n ? 0 : head + 1;
  buf[head] = v;
  buf[head + n] = v;
}

void DigitalFilter::Line::clear() {
  std::fill(buf.begin(), buf.end(), 0.0);
  head = n == 0 ? 0 : n - 1;
}

// ---------------------------------------------------------------- DigitalFilter

DigitalFilter::DigitalFilter(std::vector<FilterSection> sections, double fs)
    : sections_(std::move(sections)), fs_(fs) {
  if (!(fs > 0.0) || !std::isfinite(fs)) throw InvalidArgument("DigitalFilter: fs must be positive");
  if (sections_.empty()) throw InvalidArgument("DigitalFilter: no sections");
  for (auto& s : sections_) {
    if (s.b.empty() || s.a.empty()) throw InvalidArgument("DigitalFilter: empty coefficient list");
    if (s.a[0] != 1.0) throw InvalidArgument("DigitalFilter: a[0] must be 1");
    for (double v : s.b)
      if (!std::isfinite(v)) throw InvalidArgument("DigitalFilter: non-finite coefficient");
    for (double v : s.a)
      if (!std::isfinite(v)) throw InvalidArgument("DigitalFilter: non-finite coefficient");
    State st;
    st.x.n = s.b.size() - 1;
    st.y.n = s.a.size() - 1;
    st.x.buf.assign(2 * st.x.n, 0.0);
    st.y.buf.assign(2 * st.y.n, 0.0);
    st.x.clear();
    st.y.clear();
    st.rev_b = reversed_tail(s.b);
    st.rev_a = reversed_tail(s.a);
    state_.push_back(std::move(st));
  }
  hist_cache_.assign(sections_.size(), 0.0);
}

DigitalFilter DigitalFilter::identity(double fs) { return DigitalFilter({{{1.0}, {1.0}}}, fs); }

double DigitalFilter::history(std::size_t i) const {
  const State& st = state_[i];
  return st.x.dot(st.rev_b) - st.y.dot(st.rev_a);
}

double DigitalFilter::feedthrough() const {
  double g = 1.0;
  for (const auto& s : sections_) g *= s.b[0];
  return g;
}

double DigitalFilter::free_response() const {
  if (poisoned_) throw PoisonedState("filter poisoned by a non-finite input; reset() required");
  if (!cache_valid_) {
    for (std::size_t i = 0; i < sections_.size(); ++i) hist_cache_[i] = history(i);
    cache_valid_ = true;
  }
  double v = 0.0;
  for (std::size_t i = 0; i < sections_.size(); ++i) v = sections_[i].b[0] * v + hist_cache_[i];
  return v;
}

double DigitalFilter::step(double u) {
  if (poisoned_) throw PoisonedState("filter poisoned by a non-finite input; reset() required");
  if (!std::isfinite(u)) {
    poisoned_ = true;
    throw PoisonedState("filter received a non-finite input");
  }
  if (!cache_valid_) {
    for (std::size_t i = 0; i < sections_.size(); ++i) hist_cache_[i] = history(i);
  }
  double v = u;
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const double y = sections_[i].b[0] * v + hist_cache_[i];
    state_[i].x.push(v);
    state_[i].y.push(y);
    v = y;
  }
  cache_valid_ = false;
  return v;
}

void DigitalFilter::reset() {
  for (auto& st : state_) {
    st.x.clear();
    st.y.clear();
  }
  cache_valid_ = false;
  poisoned_ = false;
}

std::vector<double> DigitalFilter::b() const {
  std::vector<double> out{1.0};
  for (const auto& s : sections_) out = convolve(out, s.b);
  return out;
}

std::vector<double> DigitalFilter::a() const {
  std::vector<double> out{1.0};
  for (const auto& s : sections_) out = convolve(out, s.a);
  return out;
}

std::size_t DigitalFilter::state_size() const {
  std::size_t n = 0;
  for (const auto& st : state_) n += st.x.n + st.y.n;
  return n;
}

cd DigitalFilter::response(double omega) const {
  const double theta = omega / fs_;
  const cd zinv = std::polar(1.0, -theta);
  cd h{1.0, 0.0};
  for (const auto& s : sections_) h *= poly_zinv(s.b, zinv) / poly_zinv(s.a, zinv);
  return h;
}

// ---------------------------------------------------------------- GL filters

DigitalFilter gl_fir(double alpha, double fs, int memory_len) {
  if (!(fs > 0.0)) throw InvalidArgument("gl_fir: fs must be positive");
  if (memory_len < 2) throw InvalidArgument("gl_fir: memory_len must be >= 2");
  auto c = gl_coefficients(alpha, memory_len - 1).coeffs;
  const double scale = std::pow(fs, alpha);  // 1 / h^alpha
  for (double& v : c) v *= scale;
  return DigitalFilter({{std::move(c), {1.0}}}, fs);
}

DigitalFilter gl_inverse(double alpha, double fs, int memory_len) {
  if (!(fs > 0.0)) throw InvalidArgument("gl_inverse: fs must be positive");
  if (memory_len < 2) throw InvalidArgument("gl_inverse: memory_len must be >= 2");
  auto c = gl_coefficients(alpha, memory_len - 1).coeffs;
  // Integer orders have finitely many non-zero weights; drop the exact zeros.
  if (alpha == std::floor(alpha) && alpha >= 0.0) {
    c.resize(std::min<std::size_t>(c.size(), static_cast<std::size_t>(alpha) + 1));
  }
  return DigitalFilter({{{std::pow(fs, -alpha)}, std::move(c)}}, fs);
}

Band default_band(double fs) { return {0.02 * std::numbers::pi, 0.4 * std::numbers::pi * fs}; }

// ---------------------------------------------------------------- IIR fit
//
// Model: H(z) = K * prod_k (1 - rz_k z^-1) / (1 - rp_k z^-1), every root real
// and written as r = 1 - delta with delta = 2 / (1 + e^-phi) in (0, 2), so
// |r| < 1 for any phi. Residual: log H(e^{j theta}) - alpha log(j omega),
// real part in nepers and imaginary part in radians, uniform weight per log-omega.

namespace {

constexpr double kMinDelta = 1e-12;

struct FitGrid {
  std::vector<double> omega;
  std::vector<cd> one_minus_e;  // 1 - e^{-j theta}, computed without cancellation
  std::vector<cd> e;            // e^{-j theta}
  std::vector<cd> target;       // alpha * log(j omega)
};

// Root = 1 - delta, kept strictly inside the unit circle at both ends.
double delta_of(double phi) { return std::clamp(2.0 / (1.0 + std::exp(-phi)), kMinDelta, 2.0 - kMinDelta); }

double phi_of(double delta) {
  delta = std::clamp(delta, kMinDelta, 2.0 - kMinDelta);
  return std::log(delta / (2.0 - delta));
}

FitGrid make_fit_grid(double alpha, double fs, Band band, int ppd) {
  FitGrid g;
  g.omega = log_space(band.lo, band.hi, ppd);
  for (double w : g.omega) {
    const double th = w / fs;
    const double sh = std::sin(th / 2.0);
    g.one_minus_e.emplace_back(2.0 * sh * sh, std::sin(th));
    g.e.push_back(std::polar(1.0, -th));
    g.target.emplace_back(alpha * std::log(w), alpha * std::numbers::pi / 2.0);
  }
  return g;
}

// params: [log K, phi_z(0..n), phi_p(0..n)]
void residual(const FitGrid& g, const Eigen::VectorXd& p, int n, const std::vector<double>& wts,
              Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
  const std::size_t m = g.omega.size();
  r.resize(2 * static_cast<Eigen::Index>(m));
  if (jac) jac->setZero(2 * static_cast<Eigen::Index>(m), p.size());
  for (std::size_t i = 0; i < m; ++i) {
    cd acc{p[0], 0.0};
    const auto ri = static_cast<Eigen::Index>(i);
    if (jac) (*jac)(2 * ri, 0) = 1.0;
    for (int k = 0; k < 2 * n; ++k) {
      const double phi = p[1 + k];
      const double d = delta_of(phi);
      const cd f = g.one_minus_e[i] + d * g.e[i];
      const double sign = k < n ? 1.0 : -1.0;
      acc += sign * std::log(f);
      if (jac) {
        const cd df = sign * g.e[i] / f * (d * (1.0 - d / 2.0));
        (*jac)(2 * ri, 1 + k) = df.real();
        (*jac)(2 * ri + 1, 1 + k) = df.imag();
      }
    }
    const double w = wts[i];
    const cd e = acc - g.target[i];
    r[2 * ri] = w * e.real();
    r[2 * ri + 1] = w * e.imag();
    if (jac) jac->row(2 * ri) *= w, jac->row(2 * ri + 1) *= w;
  }
}

DigitalFilter build_filter(const Eigen::VectorXd& p, int n, double fs) {
  std::vector<FilterSection> secs;
  const double gain = std::exp(p[0]);
  for (int k = 0; k < n; ++k) {
    const double rz = 1.0 - delta_of(p[1 + k]);
    const double rp = 1.0 - delta_of(p[1 + n + k]);
    secs.push_back({{1.0, -rz}, {1.0, -rp}});
  }
  secs.front().b[0] *= gain;
  secs.front().b[1] *= gain;
  return DigitalFilter(std::move(secs), fs);
}

Eigen::VectorXd initial_guess(double alpha, double fs, int n, Band band) {
  Eigen::VectorXd p(1 + 2 * n);
  const double T = 1.0 / fs;
  auto to_phi = [&](double w) { return phi_of(-std::expm1(-w * T)); };

  const long k_int = std::lround(alpha);
  const int n_int = static_cast<int>(std::min<long>(std::labs(k_int), n));
  const int n_frac = n - n_int;
  const double r = alpha - static_cast<double>(k_int);

  int slot = 0;
  for (int i = 0; i < n_int; ++i, ++slot) {
    const double low = band.lo / 20.0;
    const double high = band.hi * 20.0;
    // Differentiator: zero below the band, pole above it. Integrator: the reverse.
    p[1 + slot] = to_phi(k_int > 0 ? low : high);
    p[1 + n + slot] = to_phi(k_int > 0 ? high : low);
  }
  const double wb = band.lo / 3.0;
  const double wh = band.hi * 3.0;
  for (int i = 1; i <= n_frac; ++i, ++slot) {
    const double wz = wb * std::pow(wh / wb, (2.0 * i - 1.0 - r) / (2.0 * n_frac));
    const double wp = wb * std::pow(wh / wb, (2.0 * i - 1.0 + r) / (2.0 * n_frac));
    p[1 + slot] = to_phi(wz);
    p[1 + n + slot] = to_phi(wp);
  }
  p[0] = 0.0;
  return p;
}

}  // namespace

Deviation ideal_deviation(const DigitalFilter& f, double alpha, Band band, int ppd) {
  Deviation d;
  for (double w : log_space(band.lo, band.hi, ppd)) {
    const cd ideal = std::polar(std::pow(w, alpha), alpha * std::numbers::pi / 2.0);
    const cd ratio = f.response(w) / ideal;
    d.max_mag_db = std::max(d.max_mag_db, std::fabs(20.0 * std::log10(std::abs(ratio))));
    d.max_phase_deg = std::max(d.max_phase_deg, std::fabs(std::arg(ratio)) * 180.0 / std::numbers::pi);
  }
  return d;
}

FitReport iir_fit_report(double alpha, double fs, int order, Band band, const FitOptions& opts) {
  if (!std::isfinite(alpha)) throw InvalidArgument("iir_fit: non-finite alpha");
  if (!(fs > 0.0)) throw InvalidArgument("iir_fit: fs must be positive");
  if (order < 1) throw InvalidArgument("iir_fit: order must be >= 1");
  if (!(band.lo > 0.0) || !(band.hi > band.lo) || !(band.hi < std::numbers::pi * fs))
    throw InvalidArgument("iir_fit: band must satisfy 0 < lo < hi < pi*fs");

  if (alpha == 0.0) {
    DigitalFilter id = DigitalFilter::identity(fs);
    return {id, 0.0, {}, 0};
  }

  const FitGrid grid = make_fit_grid(alpha, fs, band, opts.points_per_decade);
  const std::size_t m = grid.omega.size();
  Eigen::VectorXd p = initial_guess(alpha, fs, order, band);

  // Residual components are scaled by the acceptance envelope so that a unit
  // residual means "exactly at tolerance" in either magnitude or phase.
  const double mag_tol = opts.max_mag_db * std::log(10.0) / 20.0;
  const double ph_tol = opts.max_phase_deg * std::numbers::pi / 180.0;
  std::vector<double> wts(m, 1.0);

  Eigen::VectorXd r;
  residual(grid, p, order, wts, r, nullptr);
  double mean_re = 0.0;
  for (Eigen::Index i = 0; i < r.size(); i += 2) mean_re += r[i];
  p[0] -= mean_re / static_cast<double>(m);

  auto scaled_residual = [&](const Eigen::VectorXd& q, Eigen::VectorXd& out, Eigen::MatrixXd* jac) {
    residual(grid, q, order, wts, out, jac);
    for (Eigen::Index i = 0; i < out.size(); i += 2) {
      out[i] /= mag_tol;
      out[i + 1] /= ph_tol;
      if (jac) {
        jac->row(i) /= mag_tol;
        jac->row(i + 1) /= ph_tol;
      }
    }
  };

  int total_it = 0;
  auto levenberg_marquardt = [&](int max_it) {
    Eigen::MatrixXd J;
    scaled_residual(p, r, &J);
    double cost = r.squaredNorm();
    double mu = 1e-3;
    for (int it = 0; it < max_it; ++it, ++total_it) {
      const Eigen::MatrixXd JtJ = J.transpose() * J;
      const Eigen::VectorXd g = J.transpose() * r;
      bool improved = false;
      double rel = 0.0;
      for (int tries = 0; tries < 30; ++tries) {
        Eigen::MatrixXd A = JtJ;
        for (Eigen::Index d = 0; d < A.rows(); ++d) A(d, d) += mu * (JtJ(d, d) + 1e-12);
        const Eigen::VectorXd trial = p + A.ldlt().solve(-g);
        Eigen::VectorXd rt;
        scaled_residual(trial, rt, nullptr);
        const double ct = rt.squaredNorm();
        if (std::isfinite(ct) && ct < cost) {
          rel = (cost - ct) / std::max(cost, 1e-300);
          p = trial;
          cost = ct;
          mu = std::max(mu / 3.0, 1e-12);
          improved = true;
          break;
        }
        mu *= 4.0;
      }
      if (!improved || rel < 1e-10) break;
      scaled_residual(p, r, &J);
    }
  };

  // Least squares first, then Lawson reweighting toward the minimax fit.
  levenberg_marquardt(opts.max_iterations);
  Eigen::VectorXd best = p;
  double best_peak = std::numeric_limits<double>::infinity();
  std::vector<double> lawson(m, 1.0 / static_cast<double>(m));
  const std::vector<double> uniform(m, 1.0);
  for (int round = 0; round < 30; ++round) {
    Eigen::VectorXd raw;
    residual(grid, p, order, uniform, raw, nullptr);
    std::vector<double> peak(m);
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      peak[i] = std::max(std::fabs(raw[2 * i]) / mag_tol, std::fabs(raw[2 * i + 1]) / ph_tol);
      worst = std::max(worst, peak[i]);
    }
    if (worst < best_peak) {
      best_peak = worst;
      best = p;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += (lawson[i] *= peak[i]);
    if (!(total > 0.0)) break;
    for (std::size_t i = 0; i < m; ++i) {
      lawson[i] /= total;
      wts[i] = std::sqrt(lawson[i] * static_cast<double>(m));
    }
    levenberg_marquardt(std::max(20, opts.max_iterations / 10));
  }
  p = best;

  residual(grid, p, order, std::vector<double>(m, 1.0), r, nullptr);
  FitReport rep{build_filter(p, order, fs), std::sqrt(r.squaredNorm() / static_cast<double>(m)), {}, total_it};
  rep.deviation = ideal_deviation(rep.filter, alpha, band, opts.points_per_decade * 2);
  return rep;
}

DigitalFilter iir_fit(double alpha, double fs, int order, Band band, const FitOptions& opts) {
  FitReport rep = iir_fit_report(alpha, fs, order, band, opts);
  if (rep.deviation.max_mag_db > opts.max_mag_db || rep.deviation.max_phase_deg > opts.max_phase_deg) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "iir_fit: alpha=%g order=%d fs=%g misses tolerance (%.3f dB, %.3f deg)", alpha,
                  order, fs, rep.deviation.max_mag_db, rep.deviation.max_phase_deg);
    throw FitFailure(buf, rep.rms_residual);
  }
  return rep.filter;
}

void write_filter_csv(std::ostream& os, const DigitalFilter& f) {
  auto row = [&](const char* name, const std::vector<double>& c) {
    os << name;
    char buf[40];
    for (double v : c) {
      std::snprintf(buf, sizeof buf, ",%.12g", v);
      os << buf;
    }
    os << '\n';
  };
  os << "kind,coefficients\n";
  row("b", f.b());
  row("a", f.a());
}

}  // namespace fradrc
