#pragma once

// Exact arithmetic on roots of unity and on rational combinations of them.
//
// A CyclotomicSum stores (1/denominator) * sum_j counts[j] * zeta_N^j with
// integer counts. Two sums are compared by reducing the cross-multiplied
// difference modulo the N-th cyclotomic polynomial, so equality is exact.

#include <cmath>
#include <complex>
#include <compare>
#include <cstdint>
#include <numeric>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cfmix/error.hpp"

namespace cfmix {

inline std::int64_t floor_mod(std::int64_t a, std::int64_t n) {
  const std::int64_t r = a % n;
  return r < 0 ? r + n : r;
}

/// e^{2 pi i p/q}, stored in lowest terms with 0 <= p < q.
class RootOfUnity {
 public:
  constexpr RootOfUnity() = default;

  RootOfUnity(std::int64_t numerator, std::int64_t denominator) {
    if (denominator <= 0) fail(ErrorKind::InvalidParameter, "root of unity needs a positive denominator");
    numerator = floor_mod(numerator, denominator);
    if (numerator == 0) {
      den_ = 1;
      return;
    }
    const std::int64_t g = std::gcd(numerator, denominator);
    num_ = numerator / g;
    den_ = denominator / g;
  }

  static RootOfUnity one() { return {}; }

  std::int64_t numerator() const { return num_; }
  std::int64_t denominator() const { return den_; }
  bool is_one() const { return num_ == 0; }

  /// Exponent j with value = zeta_n^j; n must be a multiple of the denominator.
  std::int64_t exponent_over(std::int64_t n) const {
    if (n % den_ != 0) fail(ErrorKind::InvalidParameter, "root order does not divide " + std::to_string(n));
    return num_ * (n / den_);
  }

  RootOfUnity operator*(const RootOfUnity& o) const {
    const std::int64_t l = std::lcm(den_, o.den_);
    return {num_ * (l / den_) + o.num_ * (l / o.den_), l};
  }
  RootOfUnity conj() const { return {-num_, den_}; }
  RootOfUnity pow(std::int64_t e) const {
    // reduce e first so the product cannot overflow
    return {num_ * floor_mod(e, den_), den_};
  }

  std::complex<double> to_complex() const {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(num_) / static_cast<double>(den_);
    return {std::cos(angle), std::sin(angle)};
  }

  bool operator==(const RootOfUnity&) const = default;
  /// Orders by the angle p/q in [0,1).
  std::strong_ordering operator<=>(const RootOfUnity& o) const {
    const __int128 lhs = static_cast<__int128>(num_) * o.den_;
    const __int128 rhs = static_cast<__int128>(o.num_) * den_;
    if (lhs != rhs) return lhs < rhs ? std::strong_ordering::less : std::strong_ordering::greater;
    return den_ <=> o.den_;
  }

  std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

namespace detail {

inline int mobius(std::int64_t n) {
  int result = 1;
  for (std::int64_t p = 2; p * p <= n; ++p) {
    if (n % p != 0) continue;
    n /= p;
    if (n % p == 0) return 0;
    result = -result;
  }
  if (n > 1) result = -result;
  return result;
}

inline std::vector<std::int64_t> divisors(std::int64_t n) {
  std::vector<std::int64_t> small, large;
  for (std::int64_t d = 1; d * d <= n; ++d) {
    if (n % d != 0) continue;
    small.push_back(d);
    if (d * d != n) large.push_back(n / d);
  }
  small.insert(small.end(), large.rbegin(), large.rend());
  return small;
}

}  // namespace detail

/// Coefficients (lowest degree first) of the n-th cyclotomic polynomial.
inline std::vector<std::int64_t> cyclotomic_polynomial(std::int64_t n) {
  if (n <= 0) fail(ErrorKind::InvalidParameter, "cyclotomic polynomial index must be positive");
  // Phi_n = prod_{d | n} (x^d - 1)^{mu(n/d)}
  std::vector<std::int64_t> poly{1};
  const auto divs = detail::divisors(n);
  for (std::int64_t d : divs) {
    if (detail::mobius(n / d) != 1) continue;
    std::vector<std::int64_t> next(poly.size() + static_cast<std::size_t>(d), 0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] -= poly[i];
      next[i + static_cast<std::size_t>(d)] += poly[i];
    }
    poly = std::move(next);
  }
  for (std::int64_t d : divs) {
    if (detail::mobius(n / d) != -1) continue;
    const auto step = static_cast<std::size_t>(d);
    std::vector<std::int64_t> quotient(poly.size() - step, 0);
    for (std::size_t i = 0; i < quotient.size(); ++i) {
      quotient[i] = -poly[i] + (i >= step ? quotient[i - step] : 0);
    }
    poly = std::move(quotient);
  }
  return poly;
}

/// Remainder of `poly` modulo the (monic) n-th cyclotomic polynomial.
inline std::vector<__int128> reduce_mod_cyclotomic(std::vector<__int128> poly, std::int64_t n) {
  const auto phi = cyclotomic_polynomial(n);
  const std::size_t deg = phi.size() - 1;
  for (std::size_t i = poly.size(); i-- > deg;) {
    const __int128 lead = poly[i];
    if (lead == 0) continue;
    for (std::size_t j = 0; j <= deg; ++j) poly[i - deg + j] -= lead * phi[j];
  }
  poly.resize(deg, 0);
  return poly;
}

class CyclotomicSum {
 public:
  CyclotomicSum() : counts_(1, 0) {}
  CyclotomicSum(std::int64_t order, std::int64_t denominator)
      : order_(order), denominator_(denominator), counts_(static_cast<std::size_t>(order), 0) {
    if (order <= 0 || denominator <= 0) fail(ErrorKind::InvalidParameter, "cyclotomic sum needs positive order and denominator");
  }

  static CyclotomicSum from_terms(std::span<const RootOfUnity> terms, std::int64_t denominator = 1) {
    std::int64_t order = 1;
    for (const auto& t : terms) order = std::lcm(order, t.denominator());
    CyclotomicSum sum(order, denominator);
    for (const auto& t : terms) sum.counts_[static_cast<std::size_t>(t.exponent_over(order))] += 1;
    return sum;
  }

  /// Takes ownership of raw exponent counts over zeta_order.
  static CyclotomicSum from_counts(std::vector<std::int64_t> counts, std::int64_t denominator) {
    CyclotomicSum sum(static_cast<std::int64_t>(counts.size()), denominator);
    sum.counts_ = std::move(counts);
    return sum;
  }

  static CyclotomicSum integer(std::int64_t value) {
    CyclotomicSum sum;
    sum.counts_[0] = value;
    return sum;
  }

  std::int64_t order() const { return order_; }
  std::int64_t denominator() const { return denominator_; }
  std::span<const std::int64_t> counts() const { return counts_; }

  void add(const RootOfUnity& root, std::int64_t coefficient = 1) {
    if (order_ % root.denominator() != 0) lift(std::lcm(order_, root.denominator()));
    counts_[static_cast<std::size_t>(root.exponent_over(order_))] += coefficient;
  }

  /// Re-expresses the sum over zeta_n for a multiple n of the current order.
  CyclotomicSum lifted(std::int64_t n) const {
    CyclotomicSum out = *this;
    out.lift(n);
    return out;
  }

  /// Canonical numerator: coefficients of the reduced polynomial in zeta_N.
  std::vector<__int128> reduced_numerator() const {
    return reduce_mod_cyclotomic({counts_.begin(), counts_.end()}, order_);
  }

  bool is_zero() const {
    for (auto c : reduced_numerator())
      if (c != 0) return false;
    return true;
  }

  std::complex<double> to_complex() const {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < counts_.size(); ++j) {
      if (counts_[j] == 0) continue;
      acc += static_cast<double>(counts_[j]) * RootOfUnity(static_cast<std::int64_t>(j), order_).to_complex();
    }
    return acc / static_cast<double>(denominator_);
  }

 private:
  void lift(std::int64_t n) {
    if (n % order_ != 0) fail(ErrorKind::InvalidParameter, "lift target must be a multiple of the order");
    if (n == order_) return;
    std::vector<std::int64_t> next(static_cast<std::size_t>(n), 0);
    const std::int64_t stride = n / order_;
    for (std::size_t j = 0; j < counts_.size(); ++j) next[j * static_cast<std::size_t>(stride)] = counts_[j];
    counts_ = std::move(next);
    order_ = n;
  }

  std::int64_t order_ = 1;
  std::int64_t denominator_ = 1;
  std::vector<std::int64_t> counts_;
};

/// Exact equality: x - y reduces to zero modulo Phi_N over a common order N.
inline bool cyclo_equal(const CyclotomicSum& x, const CyclotomicSum& y) {
  const std::int64_t n = std::lcm(x.order(), y.order());
  const auto xs = x.lifted(n);
  const auto ys = y.lifted(n);
  std::vector<__int128> diff(static_cast<std::size_t>(n), 0);
  for (std::size_t j = 0; j < diff.size(); ++j) {
    diff[j] = static_cast<__int128>(xs.counts()[j]) * y.denominator() -
              static_cast<__int128>(ys.counts()[j]) * x.denominator();
  }
  for (auto c : reduce_mod_cyclotomic(std::move(diff), n))
    if (c != 0) return false;
  return true;
}

}  // namespace cfmix
