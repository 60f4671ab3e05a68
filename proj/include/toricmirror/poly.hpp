#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "toricmirror/rational.hpp"

namespace toricmirror {

// Sparse polynomial in the equivariant parameters lambda_0..lambda_6 and a
// Laurent variable z. A monomial is packed into one word: the top byte holds
// z + 128, byte (6 - a) holds the exponent of lambda_a. Adding two packed
// monomials and subtracting kZeroZ multiplies them, as long as every
// exponent stays in range; the engine's degree caps keep them far below 255.
class Poly {
 public:
  using Mono = std::uint64_t;
  static constexpr int kMaxVars = 7;
  static constexpr Mono kZeroZ = Mono(128) << 56;

  static Mono mono(int zexp, const IntVec& lam = {}) {
    Mono m = Mono(zexp + 128) << 56;
    for (size_t a = 0; a < lam.size(); ++a) m |= Mono(lam[a]) << (8 * (6 - a));
    return m;
  }
  static int zexp(Mono m) { return static_cast<int>(m >> 56) - 128; }
  static int lam_exp(Mono m, int a) { return static_cast<int>((m >> (8 * (6 - a))) & 0xff); }
  static int lam_degree(Mono m) {
    int s = 0;
    for (int a = 0; a < kMaxVars; ++a) s += lam_exp(m, a);
    return s;
  }
  static Mono shift_z(Mono m, int by) { return m + (Mono(static_cast<std::int64_t>(by)) << 56); }

  Poly() = default;
  explicit Poly(const Rational& c) {
    if (c != 0) terms_.push_back({kZeroZ, c});
  }
  static Poly term(const Rational& c, Mono m) {
    Poly p;
    if (c != 0) p.terms_.push_back({m, c});
    return p;
  }
  static Poly z_power(int e) { return term(1, mono(e)); }
  static Poly lambda(int a, int nvars) {
    IntVec e(nvars, 0);
    e[a] = 1;
    return term(1, mono(0, e));
  }
  // Linear form sum_a w_a lambda_a.
  static Poly linear(const IntVec& w) {
    Poly p;
    for (size_t a = 0; a < w.size(); ++a)
      if (w[a] != 0) {
        IntVec e(w.size(), 0);
        e[a] = 1;
        p.terms_.push_back({mono(0, e), Rational(w[a])});
      }
    p.normalize();
    return p;
  }

  const std::vector<std::pair<Mono, Rational>>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  size_t size() const { return terms_.size(); }

  Rational coefficient(Mono m) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), m,
                               [](const auto& t, Mono v) { return t.first < v; });
    return (it != terms_.end() && it->first == m) ? it->second : Rational(0);
  }

  Poly& operator+=(const Poly& o) { return merge(o, 1); }
  Poly& operator-=(const Poly& o) { return merge(o, -1); }
  Poly operator+(const Poly& o) const { return Poly(*this) += o; }
  Poly operator-(const Poly& o) const { return Poly(*this) -= o; }
  Poly operator-() const {
    Poly r(*this);
    for (auto& t : r.terms_) t.second = -t.second;
    return r;
  }
  Poly& operator*=(const Rational& c) {
    if (c == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& t : terms_) t.second *= c;
    return *this;
  }
  Poly operator*(const Rational& c) const { return Poly(*this) *= c; }

  Poly operator*(const Poly& o) const {
    Poly r;
    if (is_zero() || o.is_zero()) return r;
    r.terms_.reserve(terms_.size() * o.terms_.size());
    for (const auto& [ma, ca] : terms_)
      for (const auto& [mb, cb] : o.terms_) r.terms_.push_back({ma + mb - kZeroZ, ca * cb});
    r.normalize();
    return r;
  }
  Poly& operator*=(const Poly& o) { return *this = *this * o; }

  // this += a * b without materializing the product separately.
  void add_product(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return;
    size_t old = terms_.size();
    terms_.reserve(old + a.terms_.size() * b.terms_.size());
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) terms_.push_back({ma + mb - kZeroZ, ca * cb});
    normalize();
  }

  Poly shifted_z(int by) const {
    Poly r(*this);
    for (auto& t : r.terms_) t.first = shift_z(t.first, by);
    return r;
  }

  template <class Pred>
  Poly filter(Pred keep) const {
    Poly r;
    for (const auto& t : terms_)
      if (keep(t.first)) r.terms_.push_back(t);
    return r;
  }
  Poly z_negative() const { return filter([](Mono m) { return zexp(m) < 0; }); }
  Poly z_polynomial() const { return filter([](Mono m) { return zexp(m) >= 0; }); }
  Poly z_coefficient(int e) const {
    Poly r;
    for (const auto& t : terms_)
      if (zexp(t.first) == e) r.terms_.push_back({shift_z(t.first, -e), t.second});
    return r;
  }
  Poly truncate_lambda_degree(int max_deg) const {
    return filter([&](Mono m) { return lam_degree(m) <= max_deg; });
  }
  // Set lambda = 0.
  Poly lambda_free_part() const { return filter([](Mono m) { return lam_degree(m) == 0; }); }
  // Set z = value.
  Poly at_z(const Rational& value) const {
    Poly r;
    for (const auto& [m, c] : terms_) {
      int e = zexp(m);
      Rational f = c;
      if (e != 0) {
        Rational p = 1;
        for (int i = 0; i < std::abs(e); ++i) p *= value;
        f = e > 0 ? Rational(f * p) : Rational(f / p);
      }
      r.terms_.push_back({shift_z(m, -e), f});
    }
    r.normalize();
    return r;
  }

  int max_zexp() const {
    int e = -1000;
    for (const auto& t : terms_) e = std::max(e, zexp(t.first));
    return e;
  }
  int min_zexp() const {
    int e = 1000;
    for (const auto& t : terms_) e = std::min(e, zexp(t.first));
    return e;
  }

  Rational evaluate(const std::vector<Rational>& lam, const Rational& zval) const {
    Rational s = 0;
    for (const auto& [m, c] : terms_) {
      Rational v = c;
      for (size_t a = 0; a < lam.size(); ++a)
        for (int e = lam_exp(m, static_cast<int>(a)); e > 0; --e) v *= lam[a];
      int e = zexp(m);
      for (int i = 0; i < std::abs(e); ++i) v = e > 0 ? Rational(v * zval) : Rational(v / zval);
      s += v;
    }
    return s;
  }

  // Exact division by a nonzero linear form in lambda (no z); false if the
  // division leaves a remainder.
  bool divide_by_linear(const IntVec& w, Poly& quotient) const {
    int lead = -1;
    for (size_t a = 0; a < w.size(); ++a)
      if (w[a] != 0) {
        lead = static_cast<int>(a);
        break;
      }
    if (lead < 0) return false;
    const Mono lead_unit = mono(0, [&] {
      IntVec e(w.size(), 0);
      e[lead] = 1;
      return e;
    }()) - kZeroZ;
    Poly lin = linear(w);
    Poly rem(*this);
    quotient = Poly();
    // Leading term w.r.t. (exponent of lambda_lead, packed order).
    auto key = [&](Mono m) { return std::make_pair(lam_exp(m, lead), m); };
    while (!rem.is_zero()) {
      auto it = std::max_element(rem.terms_.begin(), rem.terms_.end(),
                                 [&](const auto& x, const auto& y) { return key(x.first) < key(y.first); });
      if (lam_exp(it->first, lead) == 0) return false;
      Poly q = term(it->second / w[lead], it->first - lead_unit);
      quotient += q;
      rem -= q * lin;
    }
    return true;
  }

  bool operator==(const Poly& o) const { return terms_ == o.terms_; }
  bool operator!=(const Poly& o) const { return !(*this == o); }

  std::string to_string(int nvars) const {
    if (terms_.empty()) return "0";
    std::string s;
    for (size_t t = 0; t < terms_.size(); ++t) {
      const auto& [m, c] = terms_[t];
      std::string cs = c.get_str();
      if (t) s += (c < 0) ? " - " : " + ";
      else if (c < 0) s += "-";
      Rational a = abs(c);
      std::string mon;
      for (int v = 0; v < nvars; ++v) {
        int e = lam_exp(m, v);
        if (!e) continue;
        if (!mon.empty()) mon += "*";
        mon += "l" + std::to_string(v + 1);
        if (e > 1) mon += "^" + std::to_string(e);
      }
      int ze = zexp(m);
      if (ze) {
        if (!mon.empty()) mon += "*";
        mon += "z";
        if (ze != 1) mon += "^" + std::to_string(ze);
      }
      if (mon.empty()) s += a.get_str();
      else if (a == 1) s += mon;
      else s += a.get_str() + "*" + mon;
    }
    return s;
  }

  // Collects raw terms; one sort at the end instead of one per addition.
  class Builder {
   public:
    void add(const Poly& p, const Rational& scale = 1) {
      for (const auto& [m, c] : p.terms_) raw_.push_back({m, c * scale});
    }
    // Adds a * b, skipping products whose lambda-degree exceeds max_lam.
    void add_product(const Poly& a, const Poly& b, int max_lam = 1 << 20) {
      for (const auto& [ma, ca] : a.terms_) {
        const int da = lam_degree(ma);
        if (da > max_lam) continue;
        for (const auto& [mb, cb] : b.terms_)
          if (da + lam_degree(mb) <= max_lam) raw_.push_back({ma + mb - kZeroZ, ca * cb});
      }
    }
    void add_term(Mono m, const Rational& c) { raw_.push_back({m, c}); }
    bool empty() const { return raw_.empty(); }
    Poly build() {
      Poly p;
      p.terms_ = std::move(raw_);
      raw_.clear();
      p.normalize();
      return p;
    }

   private:
    std::vector<std::pair<Mono, Rational>> raw_;
  };

 private:
  Poly& merge(const Poly& o, int sign) {
    std::vector<std::pair<Mono, Rational>> out;
    out.reserve(terms_.size() + o.terms_.size());
    size_t i = 0, j = 0;
    while (i < terms_.size() || j < o.terms_.size()) {
      if (j == o.terms_.size() || (i < terms_.size() && terms_[i].first < o.terms_[j].first)) {
        out.push_back(std::move(terms_[i++]));
      } else if (i == terms_.size() || o.terms_[j].first < terms_[i].first) {
        out.push_back({o.terms_[j].first, sign > 0 ? o.terms_[j].second : Rational(-o.terms_[j].second)});
        ++j;
      } else {
        Rational c = terms_[i].second;
        if (sign > 0) c += o.terms_[j].second;
        else c -= o.terms_[j].second;
        if (c != 0) out.push_back({terms_[i].first, std::move(c)});
        ++i;
        ++j;
      }
    }
    terms_ = std::move(out);
    return *this;
  }

  void normalize() {
    std::sort(terms_.begin(), terms_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<Mono, Rational>> out;
    out.reserve(terms_.size());
    for (auto& t : terms_) {
      if (!out.empty() && out.back().first == t.first) out.back().second += t.second;
      else out.push_back(std::move(t));
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const auto& t) { return t.second == 0; }), out.end());
    terms_ = std::move(out);
  }

  std::vector<std::pair<Mono, Rational>> terms_;
};

}  // namespace toricmirror
