#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fradrc/adrc.hpp"
#include "fradrc/error.hpp"
#include "fradrc/stability.hpp"

using namespace fradrc;

namespace {

// (w + a)^k, descending.
std::vector<double> binom_poly(double a, int k) {
  std::vector<double> c{1.0};
  for (int i = 0; i < k; ++i) {
    std::vector<double> n(c.size() + 1, 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      n[j] += c[j];
      n[j + 1] += a * c[j];
    }
    c = n;
  }
  return c;
}

AdrcDesign sec5_ifo() {
  AdrcDesign d;
  d.eso = make_ifo_eso(derive_orders(2, Rational(6, 5), Rational(6, 5)), 1200, 5, 8000);
  d.trk = tracking_from_gains(d.eso.orders, 1.2e6, {4000});
  return d;
}

}  // namespace

TEST_CASE("sector check on textbook polynomials") {
  const auto r = sector_check({binom_poly(7.0, 3), Rational(1)});
  CHECK(r.verdict == Verdict::Stable);
  CHECK(r.min_arg_margin == doctest::Approx(std::numbers::pi / 2));
  for (auto z : r.roots) CHECK(std::abs(z + 7.0) < 1e-4);

  CHECK(sector_check({{1, 0, 1}, Rational(1)}).verdict == Verdict::Marginal);
  CHECK(sector_check({{1, 0, -1}, Rational(1)}).verdict == Verdict::Unstable);
  // w^2 + 1 with lambda = 1/2: |arg| = pi/2 > pi/4.
  CHECK(sector_check({{1, 0, 1}, Rational(1, 2)}).verdict == Verdict::Stable);
}

TEST_CASE("poly_roots handles zeros and repeated roots") {
  double res = 0;
  const auto r = poly_roots(std::vector<double>{1, -3, 2, 0}, &res);
  REQUIRE(r.size() == 3);
  std::vector<double> re;
  for (auto z : r) re.push_back(z.real());
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(0.0));
  CHECK(re[1] == doctest::Approx(1.0));
  CHECK(re[2] == doctest::Approx(2.0));
  CHECK(res < 1e-12);
  for (auto z : poly_roots(binom_poly(1200.0, 4))) CHECK(std::abs(z + 1200.0) / 1200.0 < 1e-6);
}

TEST_CASE("char_poly_eso and its commensurate form") {
  const auto o = derive_orders(2, Rational(6, 5), Rational(6, 5));
  const auto L = eso_gains(3, 1.0);
  const FracPoly p = char_poly_eso(o, L);
  REQUIRE(p.size() == 4);
  CHECK(p.terms()[0].order == Rational(16, 5));
  CHECK(p.terms()[1].order == Rational(2));
  CHECK(p.terms()[2].order == Rational(6, 5));
  CHECK(p.terms()[3].order == Rational(0));
  CHECK(p.terms()[3].coeff == 1.0);
  CHECK(to_commensurate(p, Rational(1, 5)).degree() == 16);
}

TEST_CASE("nominal second-order closed loop") {
  const PlantModel p{{10, 10}, 5};
  const AdrcDesign d = sec5_ifo();
  const auto cp = char_poly_closed(p, d);
  CHECK(cp.lambda == Rational(1, 5));
  CHECK(cp.degree() == to_commensurate(char_poly_closed_s(p, d), Rational(1, 5)).degree());
  const auto r = sector_check(cp);
  CHECK(r.verdict == Verdict::Stable);
  CHECK(r.residual < 1e-10);
  const auto rp = sector_check(char_poly_closed(p, d, LambdaConvention::Paper));
  CHECK(rp.verdict == Verdict::Stable);
  CHECK(rp.lambda == Rational(1, 125));

  PlantModel wrong = p;
  wrong.b = 4;
  CHECK_THROWS_AS(char_poly_closed(wrong, d), PreconditionError);
}

TEST_CASE("double integrator: closed loop is tracking times observer polynomial") {
  const PlantModel p{{0, 0}, 5};
  const AdrcDesign d = sec5_ifo();
  const FracPoly cl = char_poly_closed_s(p, d);
  const FracPoly obs = char_poly_eso(d.eso.orders, d.eso.L);
  const FracPoly trk{{1.0, Rational(2)}, {4000.0, Rational(6, 5)}, {1.2e6, Rational(0)}};
  for (double w : {0.5, 30.0, 900.0}) {
    const cdouble a = cl.eval_jw(w), b = obs.eval_jw(w) * trk.eval_jw(w);
    CHECK(std::abs(a - b) / std::abs(b) < 1e-9);
  }
}

TEST_CASE("ESO boundary polynomials") {
  for (int n : {2, 3}) {
    const double w0 = 500;
    const auto beta = eso_gains(n + 1, w0);
    const auto k = kharitonov_eso(beta);
    REQUIRE(k.size() == 3);
    // First: one root at -(sum beta_1..n) - beta_{n+1}.
    double s = 0;
    for (int i = 0; i < n; ++i) s += beta[i];
    REQUIRE(k[0].size() == 2);
    CHECK(-k[0][1] / k[0][0] == doctest::Approx(-(s + beta[n])));
    for (auto z : poly_roots(k[2])) CHECK(std::abs(z + w0) / w0 < 1e-6);
  }
}

TEST_CASE("closed2 boundary coefficient A0") {
  const auto k = kharitonov_closed2({10, 10, 1, 9, 100});
  REQUIRE(k.size() == 3);
  CHECK(k[0][0] == doctest::Approx(3010));
  CHECK(k[0].size() == 5);
  CHECK(k[1].size() == 6);
  CHECK(k[2].size() == 6);
}

TEST_CASE("Routh table") {
  CHECK(routh_table(std::vector<double>{1, 2, 1}).hurwitz);
  const auto r = routh_table(std::vector<double>{1, 0, -1});
  CHECK_FALSE(r.hurwitz);
  // s^3 + s^2 + s + 1 has roots on the imaginary axis: zero row.
  const auto z = routh_table(std::vector<double>{1, 1, 1, 1});
  CHECK(z.zero_row);
  CHECK_FALSE(z.hurwitz);
  // s^3 + 2 s^2 + s + 2: same zero-row structure.
  CHECK(routh_table(std::vector<double>{1, 2, 1, 2}).zero_row);
  // s^4 + s^3 + 2 s^2 + 2 s + 3: zero pivot, two RHP roots.
  const auto e = routh_table(std::vector<double>{1, 1, 2, 2, 3});
  CHECK(e.epsilon_used);
  CHECK_FALSE(e.hurwitz);
  CHECK(e.sign_changes == 2);
  CHECK(routh_table(binom_poly(3.0, 6)).hurwitz);
}

TEST_CASE("find_omega0") {
  const PlantModel p{{10, 10}, 5};
  const double w0 = find_omega0(p, 1.2e6, 4000);
  CHECK(std::isfinite(w0));
  for (double w : {w0, 2 * w0})
    for (const auto& b : kharitonov_closed2({10, 10, 1.2e6, 4000, w})) CHECK(routh_table(b).hurwitz);
  bool below_fails = false;
  for (const auto& b : kharitonov_closed2({10, 10, 1.2e6, 4000, w0 / 1.2}))
    if (!routh_table(b).hurwitz) below_fails = true;
  CHECK(below_fails);

  CHECK_THROWS_AS(find_omega0(p, 1.2e6, 5), PreconditionError);
  CHECK_THROWS_AS(find_omega0(p, 0.0, 9), PreconditionError);
  CHECK_THROWS_AS(find_omega0(PlantModel{{-1, 10}, 5}, 1, 9), PreconditionError);
  // 1P is even for a0 = a1 = 0.
  CHECK_THROWS_AS(find_omega0(PlantModel{{0, 0}, 5}, 1, 9), NotFound);
}

TEST_CASE("report writers") {
  const auto r = sector_check({binom_poly(2.0, 2), Rational(1)});
  std::ostringstream csv, js;
  write_report_csv(csv, r);
  write_report_json(js, r);
  CHECK(csv.str().rfind("re,im,abs_arg,margin\n", 0) == 0);
  CHECK(js.str().find("\"verdict\": \"stable\"") != std::string::npos);
  CHECK(to_string(Verdict::Indeterminate) == "indeterminate");
  CHECK(parse_lambda_convention("paper") == LambdaConvention::Paper);
  CHECK_THROWS_AS(parse_lambda_convention("x"), InvalidArgument);
}
