#pragma once

#include <complex>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "fradrc/rational.hpp"

namespace fradrc {

using cdouble = std::complex<double>;

// One c * s^order term. Orders are exact rationals; coefficients are doubles.
struct Term {
  double coeff = 0.0;
  Rational order;
};

// Sum of c_k * s^{alpha_k} with non-negative rational orders.
//
// Invariants after construction: orders pairwise distinct, strictly descending,
// every coefficient finite and non-zero. Like terms produced by arithmetic are
// merged, and a merged coefficient is dropped when it is below 1e-12 of the
// largest contribution that went into it.
class FracPoly {
 public:
  static constexpr double kMergeTolerance = 1e-12;

  FracPoly() = default;
  FracPoly(std::initializer_list<Term> terms);
  explicit FracPoly(std::vector<Term> terms);

  static FracPoly constant(double c);
  static FracPoly monomial(double c, Rational order);

  std::span<const Term> terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  Rational degree() const;             // highest order; 0 for the zero polynomial
  double leading_coeff() const;        // 0 for the zero polynomial
  double coeff_of(const Rational& order) const;

  // Principal-branch evaluation: s^a = exp(a log s).
  cdouble eval(cdouble s) const;
  // Evaluation on the imaginary axis, (j w)^a = w^a e^{j a pi/2}, w > 0.
  cdouble eval_jw(double omega) const;
  double eval_real(double x) const;  // x > 0
  // Sum of |c_k| |s|^{a_k}; the natural scale for judging cancellation.
  double abs_sum(double abs_s) const;

  FracPoly scaled(double c) const;
  FracPoly shifted(const Rational& order) const;  // multiply by s^order

  friend FracPoly operator+(const FracPoly& a, const FracPoly& b);
  friend FracPoly operator-(const FracPoly& a, const FracPoly& b);
  friend FracPoly operator*(const FracPoly& a, const FracPoly& b);
  FracPoly operator-() const { return scaled(-1.0); }

  std::string str() const;

 private:
  std::vector<Term> terms_;
};

// Aliases matching the operation names used across the toolkit.
FracPoly fp_add(const FracPoly& a, const FracPoly& b);
FracPoly fp_mul(const FracPoly& a, const FracPoly& b);

// num(s)/den(s), den never the zero polynomial.
class FracRational {
 public:
  FracRational() : num_(FracPoly::constant(0.0)), den_(FracPoly::constant(1.0)) {}
  FracRational(FracPoly num, FracPoly den);
  static FracRational from_poly(FracPoly p) { return {std::move(p), FracPoly::constant(1.0)}; }

  const FracPoly& num() const { return num_; }
  const FracPoly& den() const { return den_; }

  cdouble eval_jw(double omega) const;
  cdouble eval(cdouble s) const;

  FracRational inverse() const;

 private:
  FracPoly num_;
  FracPoly den_;
};

FracRational fr_mul(const FracRational& g, const FracRational& h);
FracRational fr_add(const FracRational& g, const FracRational& h);
// g / (1 + g h)
FracRational fr_feedback(const FracRational& g, const FracRational& h);

struct FreqPoint {
  double omega = 0.0;
  cdouble value{0.0, 0.0};
  bool defined = true;  // false when the denominator vanishes at this frequency
};

std::vector<FreqPoint> freq_response(const FracRational& g, std::span<const double> omegas);

// Coefficients (descending powers of w) of the integer polynomial Q with
// Q(s^lambda) == p(s). Throws IncommensurateOrder when an order is not k*lambda.
std::vector<double> commensurate(const FracPoly& p, const Rational& lambda);

// Determinant of a square matrix of FracPoly entries (row-major) by cofactor
// expansion, skipping zero entries. Meant for the small interconnection matrices
// of observer and loop algebra.
FracPoly fp_det(const std::vector<std::vector<FracPoly>>& m);

// Evaluates descending-coefficient integer polynomials.
cdouble polyval(std::span<const double> coeffs_desc, cdouble x);

}  // namespace fradrc
