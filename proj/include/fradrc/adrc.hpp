#pragma once

#include <span>
#include <string>
#include <vector>

#include "fradrc/discretize.hpp"
#include "fradrc/fracpoly.hpp"
#include "fradrc/plant.hpp"
#include "fradrc/rational.hpp"

namespace fradrc {

enum class Variant { IO, FO, IFO };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

// chi + (n-1) gamma = m, n = floor(m/chi) + 1.
struct AdrcOrders {
  int m = 2;
  Rational chi;
  Rational gamma;
  Rational nu;
  int n = 2;
  // Non-fatal notes, e.g. nu sitting on an endpoint of (gamma, chi).
  std::vector<std::string> warnings;
};

// Throws OrderConstraint unless 1 < chi < 2, m >= 2 and gamma <= nu <= chi.
// The endpoints nu = gamma and nu = chi are accepted with a warning.
AdrcOrders derive_orders(int m, const Rational& chi, const Rational& nu);
AdrcOrders derive_orders(int m, double chi, double nu);

double binomial(int n, int k);

// beta_i = C(state_count, i) omega0^i, i = 1..state_count.
std::vector<double> eso_gains(int state_count, double omega0);

struct TrackingConfig {
  double kp = 0.0;
  std::vector<double> kd;  // multiplies z_2, z_3, ...
  double omega_c = 0.0;
  double omega_g = 0.0;
};

enum class KdFormula {
  Corrected,  // kd_i = C(n-1, i-1) omega_c^{n-i}
  Literal,    // kd_i = C(n-1, i) omega_c^{n-1-i}, the literal variant
};

// kp = omega_g^chi omega_c^{n-1}.
TrackingConfig tracking_gains(const AdrcOrders& o, double omega_c, double omega_g,
                              KdFormula formula = KdFormula::Corrected);

// Recovers omega_c and omega_g from explicit gains (omega_c = kd_{n-1} / (n-1)).
TrackingConfig tracking_from_gains(const AdrcOrders& o, double kp, std::vector<double> kd);

enum class FilterBank { Fitted, GlOracle };

struct EsoConfig {
  Variant variant = Variant::IFO;
  int m = 2;
  AdrcOrders orders;  // unused for IO
  double omega0 = 0.0;
  double b0 = 1.0;
  std::vector<double> L;
  double fs = 8000.0;
  int filter_order = 6;
  Band band{};  // lo == 0 means default_band(fs)
  FilterBank bank = FilterBank::Fitted;
  int gl_memory = 2048;
  // FO only: order of the second state; the third gets 1 - fo_split.
  Rational fo_split = Rational(1, 5);

  int state_count() const;
  // Row that carries b0 u.
  int input_row() const { return state_count() - 2; }
  std::vector<Rational> q() const;
  Band effective_band() const;
  void validate() const;
};

// Convenience constructors with binomial gains.
EsoConfig make_ifo_eso(const AdrcOrders& o, double omega0, double b0, double fs);
EsoConfig make_io_eso(int m, double omega0, double b0, double fs);
// m = 2 only; fo_split defaults to chi - 1.
EsoConfig make_fo_eso(int m, const Rational& chi, double omega0, double b0, double fs);

// Observer plus tracking law u0 = kp (r - z1) - sum kd_i z_{i+1}, u = (u0 - z_last) / b0.
struct AdrcDesign {
  std::string name;
  EsoConfig eso;
  TrackingConfig trk;
};

// IO-ADRC with C_pd(s) = k_ip (1 + k_id s).
AdrcDesign make_io_design(int m, double omega0, double b0, double fs, double k_ip, double k_id);

// One realized fractional integrator per state; z solved implicitly each sample.
class Observer {
 public:
  explicit Observer(const EsoConfig& cfg);

  // One sample: D^q z = A z + B u + L (y - z_1). Throws PoisonedState on non-finite input.
  const std::vector<double>& step(double u, double y);
  // Same sample, but with u = offset + gain . z solved jointly with z (no input delay).
  // Returns u.
  double step_coupled(double y, double offset, std::span<const double> gain);
  const std::vector<double>& z() const { return z_; }
  const EsoConfig& config() const { return cfg_; }
  std::span<const DigitalFilter> filters() const { return filters_; }
  void reset();

 private:
  double solve(double y, double offset, std::span<const double> gain);

  EsoConfig cfg_;
  std::vector<DigitalFilter> filters_;
  std::vector<double> z_;
  bool poisoned_ = false;
};

// Realization of s^{-q}: exact backward-difference for integer q, otherwise the
// configured bank. Fitted filters are memoized per (q, fs, order, band).
DigitalFilter integrator_filter(const Rational& q, const EsoConfig& cfg);

Observer build_observer(const EsoConfig& cfg);
const std::vector<double>& observer_step(Observer& obs, double u, double y);

double control_law(std::span<const double> z, double r, const TrackingConfig& trk, double b0);
// control_law written as u = offset + gain . z.
void control_law_affine(double r, const TrackingConfig& trk, double b0, int state_count,
                        double& offset, std::vector<double>& gain);
double io_control_law(std::span<const double> z, double r, double k_ip, double k_id, double b0);

struct SimResult {
  std::vector<double> t, r, y, u, f_hat, f_true, d;
  std::vector<std::vector<double>> z;  // z[i][k]
  bool diverged = false;
  std::size_t samples() const { return t.size(); }
};

// Samples y_k, solves the observer and control law jointly for (z_k, u_k) and holds
// u_k over [t_k, t_{k+1}). Stops early and sets diverged when |y| > 1e6 |ref| or y is
// not finite. f_true is NaN for the FO variant, whose extended state is not the total disturbance f.
SimResult closed_loop_simulate(const PlantModel& p, const AdrcDesign& design, double ref,
                               const DisturbanceProfile& dist, double dt, double T);

// Transfer blocks of the IFO loop.
struct LoopBlocks {
  FracRational Gm, Gn, Hm, Hn;
};
LoopBlocks loop_blocks(const PlantModel& p, const AdrcDesign& design);

struct OpenLoop {
  FracRational exact;
  FracRational approx;
};
// IFO: exact Z1/E0 from the blocks, approx the weighted BITF (perfect estimation).
OpenLoop open_loop_tf(const PlantModel& p, const AdrcDesign& design);

// Perfect-estimation open loop for any variant.
FracRational approx_open_loop(const AdrcDesign& design);
// Z1/E0 for any variant by eliminating the full interconnection.
FracRational open_loop_generic(const PlantModel& p, const AdrcDesign& design);

// det(diag(s^q) - A + L C); for IFO this is the closed-form ESO polynomial.
FracPoly observer_char_poly(const EsoConfig& cfg);

struct EsoTransfer {
  FracRational u_to_f;  // u -> z_last
  FracRational y_to_f;  // y -> z_last
  FracRational P;       // u0 -> y with u = (u0 - z_last) / b0 around the plant
};
EsoTransfer eso_transfer(const EsoConfig& cfg, const PlantModel& p);

// Determinant of the full plant/observer/controller interconnection; its zeros
// are the closed-loop poles for any variant.
FracPoly closed_loop_char_poly_generic(const PlantModel& p, const AdrcDesign& design);

}  // namespace fradrc
