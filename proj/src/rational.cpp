#include "approxsat/rational.hpp"

namespace approxsat {

Rat parse_rat(const std::string& text) {
  auto bad = [&] { throw std::invalid_argument("bad rational: '" + text + "'"); };
  if (text.empty()) bad();
  std::string t = text;
  for (char c : t) {
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '/' || c == '-')) bad();
  }
  try {
    Rat q(t);
    q.canonicalize();
    return q;
  } catch (...) {
    bad();
  }
  return Rat(0);  // unreachable
}

std::string format_rat(const Rat& q) {
  Rat c = q;
  c.canonicalize();  // two-argument construction does not reduce
  return c.get_str();
}

mpz_class isqrt(const mpz_class& n) {
  if (n < 0) throw std::domain_error("isqrt of negative");
  mpz_class r;
  mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
  return r;
}

Interval sqrt_enclosure(const Rat& x, const Rat& max_width) {
  if (x < 0) throw std::domain_error("sqrt_enclosure of negative");
  if (max_width <= 0) throw std::domain_error("sqrt_enclosure: width must be positive");
  if (x == 0) return Interval::point(Rat(0));
  // sqrt(p/q) = sqrt(p*q)/q.  Scale by 2^k so the enclosure width 1/(q*2^k)
  // meets the request.
  const mpz_class& p = x.get_num();
  const mpz_class& q = x.get_den();
  mpz_class scale = 1;
  Rat width(1, q);
  while (width > max_width) {
    scale <<= 8;
    width /= 256;
  }
  mpz_class n = p * q * scale * scale;
  mpz_class root = isqrt(n);
  Rat lo(root, q * scale);
  lo.canonicalize();
  Rat hi(root + 1, q * scale);
  hi.canonicalize();
  if (lo * lo == x) hi = lo;  // exact square
  return Interval(lo, hi);
}

Rat sqrt_upper(const Rat& x, const Rat& max_width) { return sqrt_enclosure(x, max_width).hi; }
Rat sqrt_lower(const Rat& x, const Rat& max_width) { return sqrt_enclosure(x, max_width).lo; }

Rat rat_pow(const Rat& x, unsigned k) {
  Rat acc(1);
  Rat base = x;
  while (k) {
    if (k & 1) acc *= base;
    base *= base;
    k >>= 1;
  }
  return acc;
}

}  // namespace approxsat
