// Randomized properties; every generator is seeded so failures reproduce.
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fradrc/analysis.hpp"
#include "fradrc/discretize.hpp"
#include "fradrc/fracpoly.hpp"
#include "fradrc/plant.hpp"
#include "fradrc/stability.hpp"

using namespace fradrc;

namespace {

using Rng = std::mt19937_64;

double uni(Rng& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }
int uni_int(Rng& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }
double log_uni(Rng& g, double lo, double hi) { return std::exp(uni(g, std::log(lo), std::log(hi))); }

FracPoly random_fracpoly(Rng& g, int q, int max_k) {
  FracPoly p;
  const int terms = uni_int(g, 1, 5);
  for (int i = 0; i < terms; ++i)
    p = p + FracPoly::monomial(uni(g, 0.1, 3.0), Rational(uni_int(g, 0, max_k), q));
  return p;
}

FracRational random_fracrational(Rng& g) {
  FracPoly den = random_fracpoly(g, 5, 12) + FracPoly::constant(1.0);
  return FracRational(random_fracpoly(g, 5, 8), den);
}

}  // namespace

TEST_CASE("commensurate evaluation equals direct evaluation") {
  Rng g(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int q = uni_int(g, 1, 10);
    const FracPoly p = random_fracpoly(g, q, 4 * q);
    const auto c = commensurate(p, Rational(1, q));
    for (int k = 0; k < 20; ++k) {
      const double s = log_uni(g, 0.05, 20.0);
      const double direct = p.eval(s).real();
      const double via = polyval(c, cdouble(std::pow(s, 1.0 / q))).real();
      CHECK(std::fabs(via - direct) <= 1e-9 * std::fabs(direct));
    }
  }
}

TEST_CASE("frequency response of a product is the product of responses") {
  Rng g(12);
  for (int trial = 0; trial < 30; ++trial) {
    const FracRational a = random_fracrational(g), b = random_fracrational(g);
    std::vector<double> w;
    for (int k = 0; k < 10; ++k) w.push_back(log_uni(g, 1e-2, 1e3));
    const auto ra = freq_response(a, w), rb = freq_response(b, w), rab = freq_response(fr_mul(a, b), w);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const cdouble want = ra[k].value * rb[k].value;
      CHECK(std::abs(rab[k].value - want) <= 1e-10 * std::abs(want));
    }
  }
}

TEST_CASE("Routh agrees with the sector test at lambda = 1") {
  Rng g(13);
  int agree = 0, stable_seen = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int deg = uni_int(g, 1, 8);
    std::vector<double> c{static_cast<double>(uni_int(g, 1, 5))};
    // Half from stable factors so both outcomes are exercised.
    if (trial % 2 == 0) {
      for (int i = 0; i < deg; ++i) {
        const double r = uni_int(g, 1, 4);
        std::vector<double> n(c.size() + 1, 0.0);
        for (std::size_t j = 0; j < c.size(); ++j) {
          n[j] += c[j];
          n[j + 1] += r * c[j];
        }
        c = n;
      }
    } else {
      for (int i = 0; i < deg; ++i) c.push_back(uni_int(g, -9, 9));
      if (c.back() == 0) c.back() = 1;
    }
    const auto rt = routh_table(c);
    const auto sc = sector_check({c, Rational(1)});
    if (sc.verdict == Verdict::Marginal || sc.verdict == Verdict::Indeterminate) continue;
    CHECK(rt.hurwitz == (sc.verdict == Verdict::Stable));
    ++agree;
    stable_seen += rt.hurwitz;
  }
  CHECK(agree >= 40);
  CHECK(stable_seen >= 20);
}

TEST_CASE("nu = chi observer is stable for any omega0 > 1") {
  Rng g(14);
  const auto o = derive_orders(2, Rational(6, 5), Rational(6, 5));
  for (int trial = 0; trial < 30; ++trial) {
    const double w0 = log_uni(g, 1.0, 1e6);
    const auto r = sector_check(to_commensurate(char_poly_eso(o, eso_gains(3, w0)), Rational(1, 5)));
    CHECK(r.verdict == Verdict::Stable);
  }
}

TEST_CASE("nu = gamma observer loses stability above a fixed omega0") {
  Rng g(15);
  const auto o = derive_orders(2, Rational(6, 5), Rational(4, 5));
  auto verdict = [&](double w0) {
    return sector_check(to_commensurate(char_poly_eso(o, eso_gains(3, w0)), Rational(1, 5))).verdict;
  };
  for (int trial = 0; trial < 20; ++trial) {
    CHECK(verdict(log_uni(g, 2.0, 250.0)) == Verdict::Stable);
    CHECK(verdict(log_uni(g, 270.0, 1e5)) == Verdict::Unstable);
  }
}

TEST_CASE("third ESO boundary polynomial is (w + omega0)^(n+1)") {
  Rng g(16);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = uni_int(g, 2, 3);
    const double w0 = log_uni(g, 1.0, 5000.0);
    for (auto z : poly_roots(kharitonov_eso(eso_gains(n + 1, w0))[2])) CHECK(std::abs(z + w0) / w0 < 1e-6);
  }
}

TEST_CASE("lambda conventions agree on the closed-loop verdict") {
  Rng g(17);
  const PlantModel p{{10, 10}, 5};
  for (int trial = 0; trial < 10; ++trial) {
    AdrcDesign d;
    d.eso = make_ifo_eso(derive_orders(2, Rational(6, 5), Rational(6, 5)), log_uni(g, 20, 3000), 5, 8000);
    d.trk = tracking_from_gains(d.eso.orders, 1.2e6 * log_uni(g, 0.3, 3), {4000 * log_uni(g, 0.3, 3)});
    const auto a = sector_check(char_poly_closed(p, d, LambdaConvention::Lcm));
    const auto b = sector_check(char_poly_closed(p, d, LambdaConvention::Paper));
    CHECK(a.verdict == b.verdict);
  }
}

TEST_CASE("mse is stable under grid refinement") {
  const PlantModel p{{10, 10}, 5};
  for (double w0 : {250.0, 500.0, 1000.0}) {
    const auto ifo = eso_transfer(make_ifo_eso(derive_orders(2, Rational(6, 5), Rational(4, 5)), w0, 5, 8000), p);
    const auto fo = eso_transfer(make_fo_eso(2, Rational(6, 5), w0, 5, 8000), p);
    for (const auto& [P, ord] : {std::pair{ifo.P, 2.0}, std::pair{fo.P, 2.2}}) {
      const double coarse = mse_delta(P, ord, FreqGrid::make(0.1, 1e4, 50)).mse;
      const double fine = mse_delta(P, ord, FreqGrid::make(0.1, 1e4, 200)).mse;
      CHECK(std::fabs(coarse - fine) <= 0.02 * fine);
    }
  }
}

TEST_CASE("plant simulation is linear") {
  Rng g(18);
  for (int trial = 0; trial < 10; ++trial) {
    const PlantModel p{{log_uni(g, 1, 100), log_uni(g, 1, 50)}, uni(g, 0.5, 5)};
    const double dt = 1e-3, T = 1.0;
    const std::size_t n = grid_steps(dt, T) + 1;
    std::vector<double> u1(n), u2(n), u12(n);
    for (std::size_t k = 0; k < n; ++k) {
      u1[k] = uni(g, -1, 1);
      u2[k] = std::sin(0.01 * k);
      u12[k] = u1[k] + u2[k];
    }
    const auto y1 = simulate_plant(p, u1, {}, dt, T), y2 = simulate_plant(p, u2, {}, dt, T);
    const auto y12 = simulate_plant(p, u12, {}, dt, T);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::fabs(y12[k] - y1[k] - y2[k]) < 1e-10);
  }
}

TEST_CASE("sinusoidal steady state matches the frequency response") {
  const PlantModel p{{1642, 116.4}, 1364.1};
  const double dt = 1e-5, T = 1.0;
  const std::size_t n = grid_steps(dt, T) + 1;
  for (double w : {5.0, 40.0, 200.0}) {
    std::vector<double> u(n);
    // Input held at mid-interval values to cancel the ZOH half-sample lag.
    for (std::size_t k = 0; k < n; ++k) u[k] = std::sin(w * (k + 0.5) * dt);
    const auto y = simulate_plant(p, u, {}, dt, T);
    const cdouble h = p.transfer().eval_jw(w);
    double worst = 0;
    for (std::size_t k = n / 2; k < n; ++k) {
      const double t = k * dt;
      worst = std::max(worst, std::fabs(y[k] - std::abs(h) * std::sin(w * t + std::arg(h))));
    }
    CHECK(worst < 1e-3 * std::abs(h));
  }
}

TEST_CASE("cascaded GL FIRs approach the summed order as memory grows") {
  const double fs = 1000;
  std::vector<double> err;
  for (int mem : {64, 256, 1024}) {
    auto a = gl_fir(0.3, fs, mem), b = gl_fir(0.5, fs, mem), ab = gl_fir(0.8, fs, mem);
    double worst = 0;
    for (int k = 0; k < 2000; ++k) {
      const double t = k / fs;
      const double u = t * t * std::exp(-t);
      worst = std::max(worst, std::fabs(b.step(a.step(u)) - ab.step(u)));
    }
    err.push_back(worst);
  }
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
}

TEST_CASE("filter stepping equals convolution for FIRs") {
  Rng g(19);
  for (int trial = 0; trial < 5; ++trial) {
    auto f = gl_fir(uni(g, 0.1, 1.9), 8000, 128);
    const auto b = f.b();
    std::vector<double> u(300);
    for (auto& v : u) v = uni(g, -1, 1);
    for (std::size_t k = 0; k < u.size(); ++k) {
      double want = 0;
      for (std::size_t j = 0; j <= k && j < b.size(); ++j) want += b[j] * u[k - j];
      CHECK(std::fabs(f.step(u[k]) - want) < 1e-12 * std::max(1.0, std::fabs(want)) * 1e3);
    }
  }
}
