// Exact rational scalars, certified enclosures, and square-root bounds.
//
// All geometric predicates in this project are decided over mpq_class; the
// only irrational quantities that ever arise are square roots of rationals,
// which are handled through directed-rounding enclosures.
#ifndef APPROXSAT_RATIONAL_HPP
#define APPROXSAT_RATIONAL_HPP

#include <gmpxx.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace approxsat {

using Rat = mpq_class;

inline Rat rat(long num, long den = 1) { return Rat(num, den); }

// 1 / 2^k as an exact rational.
inline Rat pow2_inv(unsigned k) {
  Rat r(mpz_class(1), mpz_class(1) << k);
  r.canonicalize();
  return r;
}

// Parses "p", "-p/q" or "p/q"; throws std::invalid_argument on bad syntax.
Rat parse_rat(const std::string& text);

// Canonical "p/q" (or "p" when q == 1).
std::string format_rat(const Rat& q);

// Closed interval with rational endpoints.  Used as a certificate: the true
// (possibly irrational) value is proven to lie in [lo, hi].
struct Interval {
  Rat lo;
  Rat hi;

  Interval() : lo(0), hi(0) {}
  Interval(Rat l, Rat h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo > hi) throw std::logic_error("Interval: lo > hi");
  }
  static Interval point(const Rat& v) { return Interval(v, v); }

  Rat width() const { return hi - lo; }
  bool contains(const Rat& v) const { return lo <= v && v <= hi; }

  Interval operator+(const Interval& o) const { return {lo + o.lo, hi + o.hi}; }
  Interval operator-(const Interval& o) const { return {lo - o.hi, hi - o.lo}; }
};

// Interval max: encloses max(a, b).
inline Interval interval_max(const Interval& a, const Interval& b) {
  return Interval(std::max(a.lo, b.lo), std::max(a.hi, b.hi));
}

// Largest integer r with r^2 <= n (n >= 0).
mpz_class isqrt(const mpz_class& n);

// Enclosure of sqrt(x) for x >= 0 with width <= max_width (max_width > 0).
Interval sqrt_enclosure(const Rat& x, const Rat& max_width);

// One-sided bounds, convenience wrappers around sqrt_enclosure.
Rat sqrt_upper(const Rat& x, const Rat& max_width);
Rat sqrt_lower(const Rat& x, const Rat& max_width);

// x^k for k >= 0.
Rat rat_pow(const Rat& x, unsigned k);

inline double to_double(const Rat& q) { return q.get_d(); }

}  // namespace approxsat

#endif  // APPROXSAT_RATIONAL_HPP
