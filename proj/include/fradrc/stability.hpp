#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fradrc/adrc.hpp"
#include "fradrc/fracpoly.hpp"
#include "fradrc/plant.hpp"
#include "fradrc/rational.hpp"

namespace fradrc {

// Integer polynomial in w = s^lambda, descending coefficients.
struct CommensuratePoly {
  std::vector<double> coeffs;
  Rational lambda{1};

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

enum class Verdict { Stable, Unstable, Marginal, Indeterminate };
std::string to_string(Verdict v);

struct StabilityReport {
  std::vector<cdouble> roots;    // in w
  double min_arg_margin = 0.0;   // min |arg w_i| - lambda pi / 2, radians
  Verdict verdict = Verdict::Indeterminate;
  bool condition_warning = false;
  double residual = 0.0;         // worst backward error of the returned roots
  Rational lambda{1};
  int degree = 0;
  int stride = 1;                // common gcd of the exponents that was factored out
};

enum class LambdaConvention {
  Lcm,    // 1 / lcm(q1, q2, q3)
  Paper,  // 1 / (q1 q2 q3)
};
LambdaConvention parse_lambda_convention(const std::string& s);

// s^{(n-1)gamma+chi+nu} + sum_{i=1..n} beta_i s^{(n-i)gamma+nu} + beta_{n+1}
FracPoly char_poly_eso(const AdrcOrders& o, std::span<const double> L);

// Closed-loop characteristic polynomial in s. IFO: (1/G_n) lambda + G_m s^nu A.
// Other variants: determinant of the full interconnection. Requires b == b0.
FracPoly char_poly_closed_s(const PlantModel& p, const AdrcDesign& d);

Rational base_order(const AdrcDesign& d, LambdaConvention conv);

CommensuratePoly char_poly_closed(const PlantModel& p, const AdrcDesign& d,
                                  LambdaConvention conv = LambdaConvention::Lcm);

// Observer error dynamics det(diag(s^q) - A + L C) for any variant.
CommensuratePoly char_poly_observer(const EsoConfig& cfg, LambdaConvention conv = LambdaConvention::Lcm);

CommensuratePoly to_commensurate(const FracPoly& p, const Rational& lambda);

// Roots of a descending-coefficient polynomial: balanced companion eigenvalues,
// Newton polishing, clustered roots refined as multiple roots. `residual` receives
// the worst backward error max |P(w)| / sum |c_k| |w|^k.
std::vector<cdouble> poly_roots(std::span<const double> coeffs_desc, double* residual = nullptr);

// Sector test |arg w_i| > lambda pi / 2 with a 1e-9 rad marginal band.
StabilityReport sector_check(const CommensuratePoly& cp);

// Boundary polynomials (descending coefficients).
// ESO: 1lambda, 2lambda, 3lambda from the gain vector beta_1..beta_{n+1}.
std::vector<std::vector<double>> kharitonov_eso(std::span<const double> beta);

struct Closed2Params {
  double a0 = 0.0, a1 = 0.0, kp = 0.0, kd1 = 0.0, omega0 = 0.0;
};
// 1P (A0..A4), 2P (B0..B5), 3P (C0..C5) of the m = n = 2 closed loop.
std::vector<std::vector<double>> kharitonov_closed2(const Closed2Params& p);

struct RouthResult {
  std::vector<std::vector<double>> rows;
  std::vector<double> first_column;
  bool hurwitz = false;
  bool epsilon_used = false;  // a zero pivot was replaced by a small positive number
  bool zero_row = false;      // an all-zero row was replaced by the auxiliary derivative
  int sign_changes = 0;
};
RouthResult routh_table(std::span<const double> coeffs_desc);

// Smallest omega0 in [lo, hi] (geometric grid with factor 1.2, then bisection) from
// which all three closed2 boundary polynomials stay Hurwitz on the rest of the grid.
// Throws PreconditionError when a0, a1 < 0, kp <= 0 or kd1 <= 8, NotFound otherwise.
double find_omega0(const PlantModel& p, double kp, double kd1, double lo = 1e-2, double hi = 1e7);

// One row per root: re, im, abs_arg, margin.
void write_report_csv(std::ostream& os, const StabilityReport& r);
void write_report_json(std::ostream& os, const StabilityReport& r);

}  // namespace fradrc
