#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace toricmirror {

using Rational = mpq_class;
using Integer = mpz_class;

using IntVec = std::vector<int>;

// mpq_class(n, d) does not reduce, and GMP arithmetic assumes reduced operands.
inline Rational ratio(long n, long d) {
  Rational q(n, d);
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline Rational parse_rational(const std::string& s) {
  Rational q;
  if (q.set_str(s, 10) != 0) throw std::invalid_argument("not a rational: " + s);
  q.canonicalize();
  return q;
}

inline Rational factorial(int n) {
  Integer f;
  mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(n));
  return Rational(f);
}

// Generalized binomial coefficient binom(a, n) for rational a.
inline Rational binomial(const Rational& a, int n) {
  Rational r = 1;
  for (int j = 0; j < n; ++j) r *= (a - j);
  return r / factorial(n);
}

inline int dot(const IntVec& a, const IntVec& b) {
  int s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline int sum(const IntVec& a) {
  int s = 0;
  for (int x : a) s += x;
  return s;
}

inline IntVec add(const IntVec& a, const IntVec& b) {
  IntVec r(a);
  for (size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

inline IntVec sub(const IntVec& a, const IntVec& b) {
  IntVec r(a);
  for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

inline bool is_zero(const IntVec& a) {
  for (int x : a)
    if (x != 0) return false;
  return true;
}

inline std::string to_string(const IntVec& v) {
  std::string s = "(";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

}  // namespace toricmirror
