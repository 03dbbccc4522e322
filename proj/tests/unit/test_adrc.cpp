#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <random>

#include "fradrc/adrc.hpp"
#include "fradrc/error.hpp"

using namespace fradrc;

namespace {

using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;

cdouble jpow(double w, double q) { return std::polar(std::pow(w, q), q * std::numbers::pi / 2); }

cdouble plant_den(const PlantModel& p, double w) {
  cdouble s(0, w), acc = std::pow(s, p.order());
  for (int i = 0; i < p.order(); ++i) acc += p.a[i] * std::pow(s, i);
  return acc;
}

// Per-frequency linear solve of the observer dynamics written out row by row:
// s^q_i Z_i = Z_{i+1} + [i == input] b0 U + L_i (Y - Z_1).
// Unknowns [Y, U, Z...]; the last two rows close the loop as requested.
struct Oracle {
  const EsoConfig& e;
  const PlantModel& p;

  cmat observer_rows(double w, int dim) const {
    const auto q = e.q();
    const int n = static_cast<int>(q.size());
    cmat m = cmat::Zero(n, dim);
    for (int i = 0; i < n; ++i) {
      m(i, 2 + i) += jpow(w, q[i].to_double());
      if (i + 1 < n) m(i, 2 + i + 1) -= 1.0;
      m(i, 2) += e.L[i];
      m(i, 0) -= e.L[i];
      if (i == e.input_row()) m(i, 1) -= e.b0;
    }
    return m;
  }

  // y and u prescribed: Z_last / U with Y = 0, and Z_last / Y with U = 0.
  cdouble u_to_f(double w) const { return solve_open(w, 0.0, 1.0); }
  cdouble y_to_f(double w) const { return solve_open(w, 1.0, 0.0); }

  cdouble solve_open(double w, cdouble y, cdouble u) const {
    const int n = e.state_count(), dim = n + 2;
    cmat m = cmat::Zero(dim, dim);
    m.topRows(n) = observer_rows(w, dim);
    cvec rhs = cvec::Zero(dim);
    m(n, 0) = 1.0;
    rhs(n) = y;
    m(n + 1, 1) = 1.0;
    rhs(n + 1) = u;
    const cvec x = m.partialPivLu().solve(rhs);
    return x(dim - 1);
  }

  // u0 -> y with u = (u0 - z_last) / b0 and the plant in the loop.
  cdouble P(double w) const {
    const int n = e.state_count(), dim = n + 2;
    cmat m = cmat::Zero(dim, dim);
    m.topRows(n) = observer_rows(w, dim);
    m(n, 0) = plant_den(p, w);
    m(n, 1) = -p.b;
    m(n + 1, 1) = e.b0;
    m(n + 1, dim - 1) = 1.0;
    cvec rhs = cvec::Zero(dim);
    rhs(n + 1) = 1.0;
    return m.partialPivLu().solve(rhs)(0);
  }

  // Z1 / E0 with u0 = kp e0 - sum kd_i z_{i+1}.
  cdouble open_loop(double w, const TrackingConfig& trk) const {
    const int n = e.state_count(), dim = n + 2;
    cmat m = cmat::Zero(dim, dim);
    m.topRows(n) = observer_rows(w, dim);
    m(n, 0) = plant_den(p, w);
    m(n, 1) = -p.b;
    m(n + 1, 1) = e.b0;
    for (std::size_t i = 0; i < trk.kd.size(); ++i) m(n + 1, 3 + i) += trk.kd[i];
    m(n + 1, dim - 1) += 1.0;
    cvec rhs = cvec::Zero(dim);
    rhs(n + 1) = trk.kp;
    return m.partialPivLu().solve(rhs)(2);
  }
};

double rel(cdouble a, cdouble b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

AdrcDesign sec5_ifo() {
  AdrcDesign d;
  d.eso = make_ifo_eso(derive_orders(2, Rational(6, 5), Rational(6, 5)), 1200, 5, 8000);
  d.trk = tracking_from_gains(d.eso.orders, 1.2e6, {4000});
  return d;
}

}  // namespace

TEST_CASE("derive_orders") {
  const auto o = derive_orders(2, Rational(6, 5), Rational(4, 5));
  CHECK(o.n == 2);
  CHECK(o.gamma == Rational(4, 5));
  CHECK_FALSE(o.warnings.empty());
  const auto o3 = derive_orders(3, Rational(3, 2), Rational(1));
  CHECK(o3.n == 3);
  CHECK(o3.gamma == Rational(3, 4));
  const auto near2 = derive_orders(2, Rational(199, 100), Rational(1));
  CHECK(near2.n == 2);
  CHECK(near2.gamma == Rational(1, 100));
  CHECK_THROWS_AS(derive_orders(2, Rational(2), Rational(1)), OrderConstraint);
  CHECK_THROWS_AS(derive_orders(2, Rational(6, 5), Rational(3, 2)), OrderConstraint);
  CHECK_THROWS_AS(derive_orders(1, Rational(6, 5), Rational(1)), OrderConstraint);
}

TEST_CASE("eso_gains are binomial") {
  CHECK(eso_gains(3, 500) == std::vector<double>{1500, 7.5e5, 1.25e8});
  CHECK(eso_gains(4, 1) == std::vector<double>{4, 6, 4, 1});
  CHECK(eso_gains(3, 1200) == std::vector<double>{3600, 4.32e6, 1.728e9});
  CHECK_THROWS_AS(eso_gains(3, 0.0), InvalidArgument);
}

TEST_CASE("tracking gains") {
  const auto o2 = derive_orders(2, Rational(6, 5), Rational(6, 5));
  const double wg = std::pow(1.2e6 / 4000, 1 / 1.2);
  const auto t = tracking_gains(o2, 4000, wg);
  CHECK(t.kd == std::vector<double>{4000});
  CHECK(t.kp == doctest::Approx(1.2e6));
  const auto t4 = tracking_from_gains(o2, 9.6e4, {400});
  CHECK(t4.kp / t4.kd[0] == doctest::Approx(240));
  const auto o3 = derive_orders(3, Rational(3, 2), Rational(1));
  // kd_1 multiplies s^0 and kd_2 multiplies s^gamma in (s^gamma + 1)^2.
  CHECK(tracking_gains(o3, 1, 1).kd == std::vector<double>{1, 2});
  CHECK(tracking_gains(o3, 1, 1, KdFormula::Literal).kd == std::vector<double>{2, 1});
}

TEST_CASE("observer state layout per variant") {
  const auto ifo = make_ifo_eso(derive_orders(2, Rational(6, 5), Rational(4, 5)), 500, 5, 8000);
  CHECK(ifo.state_count() == 3);
  CHECK(ifo.q() == std::vector<Rational>{Rational(6, 5), Rational(4, 5), Rational(4, 5)});
  const auto io = make_io_eso(2, 500, 5, 8000);
  CHECK(io.q() == std::vector<Rational>(3, Rational(1)));
  const auto fo = make_fo_eso(2, Rational(6, 5), 500, 5, 8000);
  CHECK(fo.state_count() == 4);
  CHECK(fo.L == std::vector<double>{2000, 1.5e6, 5e8, 6.25e10});
  CHECK_THROWS_AS(make_fo_eso(3, Rational(6, 5), 500, 5, 8000), Unsupported);
}

TEST_CASE("control laws") {
  TrackingConfig trk;
  trk.kp = 1.2e6;
  trk.kd = {4000};
  const double z0[] = {0, 0, 0};
  CHECK(control_law(z0, 1.0, trk, 5) == doctest::Approx(1.2e6 / 5));
  const double z[] = {0.3, 2.0, 7.0};
  CHECK(control_law(z, 1.0, trk, 5) == doctest::Approx((1.2e6 * 0.7 - 4000 * 2.0 - 7.0) / 5));
  const double cancel[] = {1.0, 0.0, 3.0};
  CHECK(control_law(cancel, 1.0, trk, 5) == doctest::Approx(-3.0 / 5));
  CHECK_THROWS_AS(control_law(z, 1.0, trk, 0.0), InvalidArgument);
  CHECK(io_control_law(z0, 1.0, 4466.16, 0.02562, 5) == doctest::Approx(4466.16 / 5));

  double off = 0;
  std::vector<double> g;
  control_law_affine(1.0, trk, 5, 3, off, g);
  double u = off;
  for (int i = 0; i < 3; ++i) u += g[i] * z[i];
  CHECK(u == doctest::Approx(control_law(z, 1.0, trk, 5)));
}

TEST_CASE("observer with zero inputs stays at zero") {
  auto cfg = make_ifo_eso(derive_orders(2, Rational(6, 5), Rational(4, 5)), 500, 5, 8000);
  Observer obs(cfg);
  for (int k = 0; k < 100; ++k) {
    const auto& z = obs.step(0.0, 0.0);
    for (double v : z) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(obs.step(NAN, 0.0), PoisonedState);
}

TEST_CASE("eso_transfer matches the per-frequency linear solve") {
  const PlantModel p{{10, 10}, 5};
  std::vector<EsoConfig> cfgs{
      make_ifo_eso(derive_orders(2, Rational(6, 5), Rational(4, 5)), 500, 5, 8000),
      make_fo_eso(2, Rational(6, 5), 500, 5, 8000),
      make_io_eso(2, 500, 5, 8000),
  };
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lw(-1, 4);
  for (const auto& cfg : cfgs) {
    const auto t = eso_transfer(cfg, p);
    const Oracle o{cfg, p};
    for (int k = 0; k < 10; ++k) {
      const double w = std::pow(10.0, lw(rng));
      INFO(to_string(cfg.variant), " w=", w, " lib=", t.u_to_f.eval_jw(w), " oracle=", o.u_to_f(w));
      CHECK(rel(t.u_to_f.eval_jw(w), o.u_to_f(w)) < 1e-8);
      CHECK(rel(t.y_to_f.eval_jw(w), o.y_to_f(w)) < 1e-8);
      CHECK(rel(t.P.eval_jw(w), o.P(w)) < 1e-8);
    }
  }
}

TEST_CASE("perfect-estimation limit of the compensated plant") {
  const PlantModel p{{10, 10}, 5};
  const auto cfg = make_ifo_eso(derive_orders(2, Rational(6, 5), Rational(6, 5)), 1e6, 5, 8000);
  const auto t = eso_transfer(cfg, p);
  CHECK(std::abs(cdouble(0, 1) * cdouble(0, 1) * t.P.eval_jw(1.0) - 1.0) < 1e-3);
}

TEST_CASE("nu = gamma orders: P_ifo is closer to 1/s^2 at high frequency than P_fo to 1/s^2.2") {
  const PlantModel p{{10, 10}, 5};
  const auto ifo = eso_transfer(make_ifo_eso(derive_orders(2, Rational(6, 5), Rational(4, 5)), 500, 5, 8000), p);
  const auto fo = eso_transfer(make_fo_eso(2, Rational(6, 5), 500, 5, 8000), p);
  const double w = 1e4;
  const double di = std::abs(1.0 - jpow(w, 2.0) * ifo.P.eval_jw(w));
  const double df = std::abs(1.0 - jpow(w, 2.2) * fo.P.eval_jw(w));
  CHECK(di < df);
}

TEST_CASE("loop blocks") {
  const PlantModel p{{10, 10}, 5};
  const AdrcDesign d = sec5_ifo();
  const auto b = loop_blocks(p, d);
  // den(Hm) is the observer polynomial s^{gamma+nu+chi} + b1 s^{gamma+nu} + b2 s^nu + b3.
  const auto& L = d.eso.L;
  const FracPoly expect{{1.0, Rational(16, 5)}, {L[0], Rational(2)}, {L[1], Rational(6, 5)}, {L[2], Rational(0)}};
  for (double w : {1.0, 50.0, 3000.0})
    CHECK(rel(b.Hm.den().eval_jw(w), expect.eval_jw(w)) < 1e-12);

  AdrcDesign d0 = d;
  d0.trk.kd = {0.0};
  const auto b0 = loop_blocks(p, d0);
  for (double w : {1.0, 50.0})
    CHECK(rel(b0.Gn.eval_jw(w), 1.0 / (cdouble(0, w) * cdouble(0, w) + 1.2e6)) < 1e-12);
}

TEST_CASE("exact open loop matches the frequency-point oracle") {
  const PlantModel p{{10, 10}, 5};
  const AdrcDesign d = sec5_ifo();
  const auto ol = open_loop_tf(p, d);
  const auto gen = open_loop_generic(p, d);
  const Oracle o{d.eso, p};
  for (double w : {1.0, 50.0, 114.0, 2000.0}) {
    CHECK(rel(ol.exact.eval_jw(w), o.open_loop(w, d.trk)) < 1e-8);
    CHECK(rel(gen.eval_jw(w), o.open_loop(w, d.trk)) < 1e-8);
  }
  // Weighted BITF: 300 / (s^1.2 (s^0.8/4000 + 1)).
  for (double w : {1.0, 114.0})
    CHECK(rel(ol.approx.eval_jw(w), 300.0 / (jpow(w, 1.2) * (jpow(w, 0.8) / 4000.0 + 1.0))) < 1e-12);
  // BITF asymptote far below the filter corner.
  const double wg = std::pow(300.0, 1 / 1.2);
  CHECK(std::abs(ol.approx.eval_jw(1e-3)) == doctest::Approx(std::pow(wg / 1e-3, 1.2)).epsilon(1e-4));
}

TEST_CASE("closed loop: zero reference and zero disturbance give zero signals") {
  const PlantModel p{{10, 10}, 5};
  const auto sim = closed_loop_simulate(p, sec5_ifo(), 0.0, DisturbanceProfile::none(), 1.0 / 8000, 0.01);
  CHECK_FALSE(sim.diverged);
  for (std::size_t k = 0; k < sim.samples(); ++k) {
    CHECK(sim.y[k] == 0.0);
    CHECK(sim.u[k] == 0.0);
  }
}

TEST_CASE("observer steady state under the second-order plant") {
  const PlantModel p{{10, 10}, 5};
  AdrcDesign d = sec5_ifo();
  const auto sim = closed_loop_simulate(p, d, 1.0, DisturbanceProfile::none(), 1.0 / 8000, 2.0);
  REQUIRE_FALSE(sim.diverged);
  const std::size_t k = sim.samples() - 1;
  CHECK(std::fabs(sim.z[0][k] - sim.y[k]) < 1e-3);
  // f = -a1 y' - a0 y with b = b0; y' ~ 0 at steady state.
  CHECK(sim.f_hat[k] == doctest::Approx(sim.f_true[k]).epsilon(1e-3));
  CHECK(sim.f_hat[k] == doctest::Approx(-10.0 * sim.y[k]).epsilon(1e-3));
  CHECK(std::fabs(sim.y[k] - 1.0) < 5e-3);
}

TEST_CASE("simulation rejects a mismatched sample rate") {
  const PlantModel p{{10, 10}, 5};
  CHECK_THROWS_AS(closed_loop_simulate(p, sec5_ifo(), 1.0, {}, 1.0 / 4000, 0.1), InvalidArgument);
}
