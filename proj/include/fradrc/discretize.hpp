#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <vector>

namespace fradrc {

// One rational section b(z^-1)/a(z^-1) with a[0] == 1.
struct FilterSection {
  std::vector<double> b;
  std::vector<double> a;
};

// Cascade of direct-form sections with per-section delay lines.
//
// Fitted filters are kept as first-order sections: expanding a 6th-order fit of
// s^alpha into a single b/a pair clusters roots near z = 1 and loses most of the
// precision, so b() and a() expand the cascade only for export.
class DigitalFilter {
 public:
  DigitalFilter(std::vector<FilterSection> sections, double fs);
  static DigitalFilter identity(double fs);

  // Advances one sample. A non-finite input poisons the filter and throws
  // PoisonedState; every later call throws until reset().
  double step(double u);

  // The next output is affine in the next input: y = feedthrough() * u + free_response().
  double feedthrough() const;
  double free_response() const;

  void reset();
  bool poisoned() const { return poisoned_; }

  double fs() const { return fs_; }
  std::span<const FilterSection> sections() const { return sections_; }
  std::vector<double> b() const;
  std::vector<double> a() const;
  // Total delay-line length across sections.
  std::size_t state_size() const;

  // H(e^{j omega / fs}).
  std::complex<double> response(double omega) const;

 private:
  struct Line {
    std::vector<double> buf;  // mirrored ring buffer of length 2 * n
    std::size_t n = 0;
    std::size_t head = 0;
    double dot(const std::vector<double>& rev_coeffs) const;
    void push(double v);
    void clear();
  };
  struct State {
    Line x;
    Line y;
    std::vector<double> rev_b;  // b_L .. b_1
    std::vector<double> rev_a;  // a_L .. a_1
  };

  double history(std::size_t i) const;

  std::vector<FilterSection> sections_;
  std::vector<State> state_;
  mutable std::vector<double> hist_cache_;
  mutable bool cache_valid_ = false;
  double fs_;
  bool poisoned_ = false;
};

// Truncated Grunwald-Letnikov FIR of s^alpha: b_j = c_j / h^alpha, j < memory_len, a = [1].
DigitalFilter gl_fir(double alpha, double fs, int memory_len);

// Implicit GL realization of s^{-alpha}: 1 / (truncated GL derivative of order alpha).
// With a = c_0..c_{L-1} and b = [h^alpha] this is the standard implicit GL scheme.
DigitalFilter gl_inverse(double alpha, double fs, int memory_len);

struct Band {
  double lo = 0.0;  // rad/s
  double hi = 0.0;  // rad/s
};

// (0.02 pi, 0.4 pi fs) rad/s.
Band default_band(double fs);

struct FitOptions {
  int points_per_decade = 40;
  int max_iterations = 500;
  double max_mag_db = 1.0;
  double max_phase_deg = 3.0;
};

struct Deviation {
  double max_mag_db = 0.0;
  double max_phase_deg = 0.0;
};

struct FitReport {
  DigitalFilter filter;
  double rms_residual = 0.0;  // complex-log residual on the fit grid
  Deviation deviation;
  int iterations = 0;
};

// Least-squares fit of an order-`order` IIR to (j omega)^alpha on a log grid over
// `band`. Poles and zeros are real and parametrized strictly inside the unit
// circle. Does not throw on a poor fit; see iir_fit for that.
FitReport iir_fit_report(double alpha, double fs, int order, Band band, const FitOptions& opts = {});

// As iir_fit_report, but throws FitFailure when the deviation from the ideal
// response exceeds opts.max_mag_db / opts.max_phase_deg anywhere on the band.
DigitalFilter iir_fit(double alpha, double fs, int order, Band band, const FitOptions& opts = {});

// Worst magnitude (dB) and phase (deg) deviation of f from (j omega)^alpha on a log grid.
Deviation ideal_deviation(const DigitalFilter& f, double alpha, Band band, int points_per_decade = 40);

// Two rows after a header: the expanded b coefficients, then the expanded a coefficients.
void write_filter_csv(std::ostream& os, const DigitalFilter& f);

}  // namespace fradrc
