#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ppshare {

using Bigint = mpz_class;
using Rat = mpq_class;

/// Modular exponentiation; a negative exponent uses the modular inverse of
/// the base (throws std::domain_error when no inverse exists).
inline Bigint powm(const Bigint& base, const Bigint& exp, const Bigint& mod) {
  Bigint r;
  if (exp < 0) {
    Bigint inv;
    if (mpz_invert(inv.get_mpz_t(), base.get_mpz_t(), mod.get_mpz_t()) == 0)
      throw std::domain_error("powm: base not invertible modulo mod");
    Bigint e = -exp;
    mpz_powm(r.get_mpz_t(), inv.get_mpz_t(), e.get_mpz_t(), mod.get_mpz_t());
  } else {
    mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  }
  return r;
}

inline Bigint invmod(const Bigint& a, const Bigint& mod) {
  Bigint r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0)
    throw std::domain_error("invmod: value not invertible");
  return r;
}

inline Bigint gcd(const Bigint& a, const Bigint& b) {
  Bigint r;
  mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

inline Bigint lcm(const Bigint& a, const Bigint& b) {
  Bigint r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

inline bool is_probable_prime(const Bigint& n, int rounds = 64) {
  return mpz_probab_prime_p(n.get_mpz_t(), rounds) != 0;
}

inline std::size_t bit_length(const Bigint& z) {
  if (z == 0) return 0;
  return mpz_sizeinbase(z.get_mpz_t(), 2);
}

inline Bigint factorial(unsigned long n) {
  Bigint r;
  mpz_fac_ui(r.get_mpz_t(), n);
  return r;
}

/// Floor division (toward minus infinity), matching the rounding used by
/// fixed-point encoding.
inline Bigint fdiv(const Bigint& num, const Bigint& den) {
  Bigint q;
  mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return q;
}

/// Nearest-integer division for non-negative operands, halves round up.
inline Bigint round_div(const Bigint& num, const Bigint& den) {
  if (num < 0 || den <= 0)
    throw std::invalid_argument("round_div: expects num >= 0, den > 0");
  return fdiv(2 * num + den, 2 * den);
}

/// Floor of a rational.
inline Bigint floor_rat(const Rat& x) {
  return fdiv(x.get_num(), x.get_den());
}

inline std::string to_hex(const Bigint& z) {
  if (z < 0) throw std::invalid_argument("to_hex: negative value");
  return z.get_str(16);
}

inline Bigint from_hex(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("from_hex: empty string");
  for (char c : s)
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')))
      throw std::invalid_argument("from_hex: invalid character");
  Bigint z;
  if (mpz_set_str(z.get_mpz_t(), s.c_str(), 16) != 0)
    throw std::invalid_argument("from_hex: parse failure");
  return z;
}

/// Parses a plain decimal literal ("12", "-3.25", "10.0") into an exact
/// rational.
inline Rat rat_from_decimal(const std::string& text) {
  std::string s = text;
  bool neg = false;
  std::size_t pos = 0;
  if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    neg = s[pos] == '-';
    ++pos;
  }
  std::string digits;
  std::size_t frac_digits = 0;
  bool seen_dot = false, seen_digit = false;
  for (; pos < s.size(); ++pos) {
    char c = s[pos];
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("rat_from_decimal: two dots");
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      digits += c;
      seen_digit = true;
      if (seen_dot) ++frac_digits;
    } else {
      throw std::invalid_argument("rat_from_decimal: bad character in '" + text + "'");
    }
  }
  if (!seen_digit) throw std::invalid_argument("rat_from_decimal: no digits in '" + text + "'");
  Bigint num(digits.empty() ? "0" : digits);
  Bigint den = 1;
  for (std::size_t i = 0; i < frac_digits; ++i) den *= 10;
  Rat r(neg ? Bigint(-num) : num, den);
  r.canonicalize();
  return r;
}

/// Fixed-precision decimal rendering of a rational, rounded half-up at the
/// last digit, trailing zeros trimmed. Deterministic for equal inputs.
inline std::string decimal_from_rat(const Rat& x, int max_frac_digits = 12) {
  Rat v = x;
  v.canonicalize();
  bool neg = v < 0;
  if (neg) v = -v;
  Bigint scale = 1;
  for (int i = 0; i < max_frac_digits; ++i) scale *= 10;
  // round(v * scale) half-up
  Bigint scaled = fdiv(2 * v.get_num() * scale + v.get_den(), 2 * v.get_den());
  Bigint ip = scaled / scale;
  Bigint fp = scaled % scale;
  std::string out = (neg && scaled != 0 ? "-" : "") + ip.get_str(10);
  if (fp != 0) {
    std::string frac = fp.get_str(10);
    frac.insert(frac.begin(), static_cast<std::size_t>(max_frac_digits) - frac.size(), '0');
    while (!frac.empty() && frac.back() == '0') frac.pop_back();
    out += "." + frac;
  }
  return out;
}

}  // namespace ppshare
