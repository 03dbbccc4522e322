#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "fradrc/discretize.hpp"
#include "fradrc/error.hpp"
#include "fradrc/gl.hpp"

using namespace fradrc;

namespace {

double db(double x) { return 20 * std::log10(x); }

// Direct convolution y_k = sum_j b_j u_{k-j}.
std::vector<double> convolve(const std::vector<double>& b, const std::vector<double>& u) {
  std::vector<double> y(u.size(), 0.0);
  for (std::size_t k = 0; k < u.size(); ++k)
    for (std::size_t j = 0; j <= k && j < b.size(); ++j) y[k] += b[j] * u[k - j];
  return y;
}

}  // namespace

TEST_CASE("gl_fir coefficients are c_j / h^alpha") {
  const double fs = 1000;
  const auto f = gl_fir(0.5, fs, 8);
  const auto b = f.b();
  const auto c = gl_coefficients(0.5, 7).coeffs;
  REQUIRE(b.size() == 8);
  for (int j = 0; j < 8; ++j) CHECK(b[j] == doctest::Approx(c[j] * std::pow(fs, 0.5)));
  CHECK(f.a() == std::vector<double>{1.0});
  CHECK_THROWS_AS(gl_fir(0.5, fs, 1), InvalidArgument);
  CHECK_THROWS_AS(gl_fir(0.5, 0.0, 8), InvalidArgument);
}

TEST_CASE("gl_fir stepping equals direct convolution") {
  auto f = gl_fir(0.8, 8000, 64);
  const auto b = f.b();
  std::vector<double> u(200);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = std::sin(0.05 * k) + (k % 7 == 0 ? 1.0 : 0.0);
  const auto ref = convolve(b, u);
  for (std::size_t k = 0; k < u.size(); ++k) CHECK(std::fabs(f.step(u[k]) - ref[k]) < 1e-9 * (1 + std::fabs(ref[k])));
}

TEST_CASE("impulse response of gl_inverse with alpha = 1 is a running sum") {
  const double fs = 100;
  auto f = gl_inverse(1.0, fs, 4);
  // 1 / ((1 - z^-1) fs): impulse gives 1/fs forever.
  CHECK(f.step(1.0) == doctest::Approx(1.0 / fs));
  for (int k = 0; k < 20; ++k) CHECK(f.step(0.0) == doctest::Approx(1.0 / fs));
}

TEST_CASE("feedthrough plus free response predicts the next output") {
  auto f = iir_fit(-1.2, 8000, 6, default_band(8000));
  auto g = f;
  for (int k = 0; k < 50; ++k) {
    const double u = std::cos(0.3 * k);
    const double pred = g.feedthrough() * u + g.free_response();
    const double y = g.step(u);
    CHECK(std::fabs(pred - y) < 1e-9 * (1 + std::fabs(y)));
  }
}

TEST_CASE("a non-finite input poisons until reset") {
  auto f = gl_fir(0.5, 1000, 8);
  f.step(1.0);
  CHECK_THROWS_AS(f.step(NAN), PoisonedState);
  CHECK(f.poisoned());
  CHECK_THROWS_AS(f.step(0.0), PoisonedState);
  f.reset();
  CHECK_FALSE(f.poisoned());
  CHECK(std::isfinite(f.step(1.0)));
}

TEST_CASE("fitted integrator tracks 1/(jw) within half a dB") {
  const double fs = 8000;
  const Band band = default_band(fs);
  const auto f = iir_fit(-1.0, fs, 6, band);
  for (double w = band.lo; w <= band.hi; w *= 1.25) {
    const auto h = f.response(w);
    CHECK(std::fabs(db(std::abs(h)) - db(1.0 / w)) < 0.5);
  }
}

TEST_CASE("fit deviation stays in the 1 dB / 3 deg envelope at the nominal settings") {
  for (double a : {0.8, 1.2, -0.8, -1.2}) {
    const auto rep = iir_fit_report(a, 8000, 6, default_band(8000));
    CHECK(rep.deviation.max_mag_db < 1.0);
    CHECK(rep.deviation.max_phase_deg < 3.0);
    for (const auto& s : rep.filter.sections())
      for (std::size_t i = 1; i < s.a.size(); ++i) CHECK(std::fabs(s.a[i]) < 1.0);
  }
}

TEST_CASE("iir_fit rejects bad arguments and unreachable accuracy") {
  CHECK_THROWS_AS(iir_fit(0.5, 8000, 0, default_band(8000)), InvalidArgument);
  CHECK_THROWS_AS(iir_fit(0.5, 8000, 6, Band{10, 1e6}), InvalidArgument);
  FitOptions tight;
  tight.max_mag_db = 1e-6;
  tight.max_phase_deg = 1e-6;
  CHECK_THROWS_AS(iir_fit(0.5, 8000, 1, default_band(8000), tight), FitFailure);
}

TEST_CASE("filter CSV export has a header and two coefficient rows") {
  std::ostringstream os;
  write_filter_csv(os, gl_fir(1.0, 10, 2));
  std::istringstream is(os.str());
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 3);
}
