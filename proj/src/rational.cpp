#include "fradrc/rational.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

#include "fradrc/error.hpp"

namespace fradrc {
namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw NumericalFailure("rational overflow");
  return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) throw NumericalFailure("rational overflow");
  return r;
}

}  // namespace

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
  a = std::llabs(a);
  b = std::llabs(b);
  while (b != 0) {
    const std::int64_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

std::int64_t lcm64(std::int64_t a, std::int64_t b) {
  if (a == 0 || b == 0) return 0;
  return checked_mul(std::llabs(a) / gcd64(a, b), std::llabs(b));
}

Rational::Rational(std::int64_t num) : num_(num), den_(1) {}

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw InvalidArgument("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = gcd64(num, den);
  num_ = g == 0 ? 0 : num / g;
  den_ = g == 0 ? 1 : den / g;
}

std::int64_t Rational::floor() const {
  std::int64_t q = num_ / den_;
  if (num_ % den_ != 0 && num_ < 0) --q;
  return q;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  const std::int64_t g = gcd64(a.den_, b.den_);
  const std::int64_t da = a.den_ / g;
  const std::int64_t db = b.den_ / g;
  return Rational(checked_add(checked_mul(a.num_, db), checked_mul(b.num_, da)),
                  checked_mul(a.den_, db));
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
  const std::int64_t g1 = gcd64(a.num_, b.den_);
  const std::int64_t g2 = gcd64(b.num_, a.den_);
  const std::int64_t n1 = g1 == 0 ? a.num_ : a.num_ / g1;
  const std::int64_t d2 = g1 == 0 ? b.den_ : b.den_ / g1;
  const std::int64_t n2 = g2 == 0 ? b.num_ : b.num_ / g2;
  const std::int64_t d1 = g2 == 0 ? a.den_ : a.den_ / g2;
  return Rational(checked_mul(n1, n2), checked_mul(d1, d2));
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw InvalidArgument("rational division by zero");
  return a * Rational(b.den_, b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
  const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::pair<std::int64_t, std::int64_t> rationalize(double value, std::int64_t max_den) {
  if (!std::isfinite(value)) throw InvalidArgument("rationalize: non-finite value");
  if (max_den < 1) throw InvalidArgument("rationalize: max_den must be >= 1");

  const bool negative = value < 0;
  const double x = std::fabs(value);

  // Convergents h/k of the continued fraction of x.
  std::int64_t h_prev = 1, k_prev = 0;
  std::int64_t h = static_cast<std::int64_t>(std::floor(x)), k = 1;
  double frac = x - std::floor(x);
  std::int64_t best_p = h, best_q = 1;

  while (frac > 1e-13 * std::max(1.0, x)) {
    const double inv = 1.0 / frac;
    const auto a = static_cast<std::int64_t>(std::floor(inv));
    frac = inv - static_cast<double>(a);

    const std::int64_t k_next = a * k + k_prev;
    if (k_next > max_den) {
      // Largest admissible semiconvergent; keep it only if it beats the last convergent.
      const std::int64_t t = (max_den - k_prev) / k;
      if (t > 0) {
        const std::int64_t hs = t * h + h_prev;
        const std::int64_t ks = t * k + k_prev;
        const double err_semi = std::fabs(x - static_cast<double>(hs) / static_cast<double>(ks));
        const double err_conv = std::fabs(x - static_cast<double>(h) / static_cast<double>(k));
        if (err_semi < err_conv) {
          best_p = hs;
          best_q = ks;
        }
      }
      break;
    }
    const std::int64_t h_next = a * h + h_prev;
    h_prev = h;
    k_prev = k;
    h = h_next;
    k = k_next;
    best_p = h;
    best_q = k;
  }

  const std::int64_t g = gcd64(best_p, best_q);
  if (g > 1) {
    best_p /= g;
    best_q /= g;
  }
  return {negative ? -best_p : best_p, best_q};
}

Rational to_rational(double value, std::int64_t max_den) {
  const auto [p, q] = rationalize(value, max_den);
  return Rational(p, q);
}

}  // namespace fradrc
