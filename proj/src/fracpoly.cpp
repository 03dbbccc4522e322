#include "fradrc/fracpoly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "fradrc/error.hpp"

namespace fradrc {
namespace {

struct RawTerm {
  double coeff;
  Rational order;
  double weight;  // magnitude of the contribution, for the cancellation test
};

std::vector<Term> normalize(std::vector<RawTerm> raw) {
  for (const auto& t : raw) {
    if (!std::isfinite(t.coeff)) throw InvalidArgument("FracPoly: non-finite coefficient");
    if (t.order < Rational(0)) throw InvalidArgument("FracPoly: negative order " + t.order.str());
  }
  std::stable_sort(raw.begin(), raw.end(),
                   [](const RawTerm& a, const RawTerm& b) { return a.order > b.order; });
  std::vector<Term> out;
  std::size_t i = 0;
  while (i < raw.size()) {
    double sum = 0.0;
    double scale = 0.0;
    std::size_t j = i;
    for (; j < raw.size() && raw[j].order == raw[i].order; ++j) {
      sum += raw[j].coeff;
      scale = std::max(scale, raw[j].weight);
    }
    if (sum != 0.0 && std::fabs(sum) > FracPoly::kMergeTolerance * scale) {
      out.push_back({sum, raw[i].order});
    }
    i = j;
  }
  return out;
}

std::vector<RawTerm> raw_from(std::span<const Term> terms, double sign = 1.0) {
  std::vector<RawTerm> raw;
  raw.reserve(terms.size());
  for (const auto& t : terms) raw.push_back({sign * t.coeff, t.order, std::fabs(t.coeff)});
  return raw;
}

// e^{j a pi/2} with a reduced exactly modulo 4.
cdouble quarter_turns(const Rational& a) {
  const Rational four(4);
  const Rational r = a - four * Rational((a / four).floor());
  if (r.is_integer()) {
    switch (r.num()) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  const double theta = r.to_double() * std::numbers::pi / 2.0;
  return {std::cos(theta), std::sin(theta)};
}

}  // namespace

FracPoly::FracPoly(std::initializer_list<Term> terms)
    : FracPoly(std::vector<Term>(terms)) {}

FracPoly::FracPoly(std::vector<Term> terms) : terms_(normalize(raw_from(terms))) {}

FracPoly FracPoly::constant(double c) { return FracPoly({Term{c, Rational(0)}}); }

FracPoly FracPoly::monomial(double c, Rational order) { return FracPoly({Term{c, order}}); }

Rational FracPoly::degree() const { return terms_.empty() ? Rational(0) : terms_.front().order; }

double FracPoly::leading_coeff() const { return terms_.empty() ? 0.0 : terms_.front().coeff; }

double FracPoly::coeff_of(const Rational& order) const {
  for (const auto& t : terms_)
    if (t.order == order) return t.coeff;
  return 0.0;
}

cdouble FracPoly::eval(cdouble s) const {
  cdouble acc{0.0, 0.0};
  if (s == cdouble{0.0, 0.0}) {
    for (const auto& t : terms_)
      if (t.order == Rational(0)) acc += t.coeff;
    return acc;
  }
  const cdouble log_s = std::log(s);
  for (const auto& t : terms_) {
    if (t.order == Rational(0)) {
      acc += t.coeff;
    } else {
      acc += t.coeff * std::exp(t.order.to_double() * log_s);
    }
  }
  return acc;
}

cdouble FracPoly::eval_jw(double omega) const {
  const double log_w = std::log(omega);
  cdouble acc{0.0, 0.0};
  for (const auto& t : terms_) {
    const double mag = std::exp(t.order.to_double() * log_w);
    acc += t.coeff * mag * quarter_turns(t.order);
  }
  return acc;
}

double FracPoly::eval_real(double x) const {
  double acc = 0.0;
  for (const auto& t : terms_) acc += t.coeff * std::pow(x, t.order.to_double());
  return acc;
}

double FracPoly::abs_sum(double abs_s) const {
  double acc = 0.0;
  for (const auto& t : terms_) acc += std::fabs(t.coeff) * std::pow(abs_s, t.order.to_double());
  return acc;
}

FracPoly FracPoly::scaled(double c) const {
  std::vector<RawTerm> raw;
  for (const auto& t : terms_) raw.push_back({c * t.coeff, t.order, std::fabs(c * t.coeff)});
  FracPoly out;
  out.terms_ = normalize(std::move(raw));
  return out;
}

FracPoly FracPoly::shifted(const Rational& order) const {
  std::vector<RawTerm> raw;
  for (const auto& t : terms_) raw.push_back({t.coeff, t.order + order, std::fabs(t.coeff)});
  FracPoly out;
  out.terms_ = normalize(std::move(raw));
  return out;
}

FracPoly operator+(const FracPoly& a, const FracPoly& b) {
  auto raw = raw_from(a.terms_);
  auto rb = raw_from(b.terms_);
  raw.insert(raw.end(), rb.begin(), rb.end());
  FracPoly out;
  out.terms_ = normalize(std::move(raw));
  return out;
}

FracPoly operator-(const FracPoly& a, const FracPoly& b) {
  auto raw = raw_from(a.terms_);
  auto rb = raw_from(b.terms_, -1.0);
  raw.insert(raw.end(), rb.begin(), rb.end());
  FracPoly out;
  out.terms_ = normalize(std::move(raw));
  return out;
}

FracPoly operator*(const FracPoly& a, const FracPoly& b) {
  std::vector<RawTerm> raw;
  raw.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& x : a.terms_) {
    for (const auto& y : b.terms_) {
      const double c = x.coeff * y.coeff;
      raw.push_back({c, x.order + y.order, std::fabs(c)});
    }
  }
  FracPoly out;
  out.terms_ = normalize(std::move(raw));
  return out;
}

std::string FracPoly::str() const {
  if (terms_.empty()) return "0";
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& t = terms_[i];
    std::snprintf(buf, sizeof buf, "%.12g", t.coeff);
    if (i > 0) out += " + ";
    out += buf;
    if (t.order != Rational(0)) out += "*s^" + t.order.str();
  }
  return out;
}

FracPoly fp_add(const FracPoly& a, const FracPoly& b) { return a + b; }
FracPoly fp_mul(const FracPoly& a, const FracPoly& b) { return a * b; }

FracRational::FracRational(FracPoly num, FracPoly den) : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw DegenerateSystem("FracRational: zero denominator");
}

cdouble FracRational::eval_jw(double omega) const { return num_.eval_jw(omega) / den_.eval_jw(omega); }

cdouble FracRational::eval(cdouble s) const { return num_.eval(s) / den_.eval(s); }

FracRational FracRational::inverse() const {
  if (num_.is_zero()) throw DegenerateSystem("FracRational: inverse of zero");
  return {den_, num_};
}

FracRational fr_mul(const FracRational& g, const FracRational& h) {
  return {g.num() * h.num(), g.den() * h.den()};
}

FracRational fr_add(const FracRational& g, const FracRational& h) {
  return {g.num() * h.den() + h.num() * g.den(), g.den() * h.den()};
}

FracRational fr_feedback(const FracRational& g, const FracRational& h) {
  FracPoly den = g.den() * h.den() + g.num() * h.num();
  if (den.is_zero()) throw DegenerateSystem("fr_feedback: closed loop has zero denominator");
  return {g.num() * h.den(), std::move(den)};
}

std::vector<FreqPoint> freq_response(const FracRational& g, std::span<const double> omegas) {
  if (omegas.empty()) throw InvalidArgument("freq_response: empty frequency grid");
  std::vector<FreqPoint> out;
  out.reserve(omegas.size());
  for (const double w : omegas) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("freq_response: frequencies must be positive");
    const cdouble d = g.den().eval_jw(w);
    const double scale = g.den().abs_sum(w);
    if (std::abs(d) <= 1e-14 * scale) {
      out.push_back({w, {0.0, 0.0}, false});
    } else {
      out.push_back({w, g.num().eval_jw(w) / d, true});
    }
  }
  return out;
}

std::vector<double> commensurate(const FracPoly& p, const Rational& lambda) {
  if (!(lambda > Rational(0))) throw InvalidArgument("commensurate: lambda must be positive");
  if (p.is_zero()) return {0.0};
  std::vector<std::pair<std::int64_t, double>> powers;
  for (const auto& t : p.terms()) {
    const Rational k = t.order / lambda;
    if (!k.is_integer())
      throw IncommensurateOrder("order " + t.order.str() + " is not a multiple of " + lambda.str());
    powers.emplace_back(k.num(), t.coeff);
  }
  const std::int64_t degree = powers.front().first;
  std::vector<double> coeffs(static_cast<std::size_t>(degree) + 1, 0.0);
  for (const auto& [k, c] : powers) coeffs[static_cast<std::size_t>(degree - k)] = c;
  return coeffs;
}

cdouble polyval(std::span<const double> coeffs_desc, cdouble x) {
  cdouble acc{0.0, 0.0};
  for (const double c : coeffs_desc) acc = acc * x + c;
  return acc;
}

}  // namespace fradrc

namespace fradrc {

namespace {

FracPoly det_rec(const std::vector<std::vector<FracPoly>>& m, std::vector<int>& cols, int row) {
  const int n = static_cast<int>(m.size());
  if (row == n) return FracPoly::constant(1.0);
  FracPoly acc;
  int sign = 1;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const int c = cols[k];
    if (!m[row][c].is_zero()) {
      std::vector<int> rest = cols;
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
      FracPoly minor = det_rec(m, rest, row + 1);
      FracPoly t = m[row][c] * minor;
      acc = sign > 0 ? acc + t : acc - t;
    }
    sign = -sign;
  }
  return acc;
}

}  // namespace

FracPoly fp_det(const std::vector<std::vector<FracPoly>>& m) {
  const std::size_t n = m.size();
  for (const auto& r : m)
    if (r.size() != n) throw InvalidArgument("fp_det: matrix must be square");
  if (n == 0) return FracPoly::constant(1.0);
  std::vector<int> cols(n);
  for (std::size_t i = 0; i < n; ++i) cols[i] = static_cast<int>(i);
  return det_rec(m, cols, 0);
}

}  // namespace fradrc
