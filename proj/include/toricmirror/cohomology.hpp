#pragma once

#include <map>
#include <optional>
#include <vector>

#include "toricmirror/errors.hpp"
#include "toricmirror/fan.hpp"
#include "toricmirror/linalg.hpp"
#include "toricmirror/poly.hpp"

namespace toricmirror {

// A lattice point used as a key of the phi-basis. Ordered by (|k|, lex k),
// the canonical order of enumerate_points.
struct BasisKey {
  int norm = 0;
  IntVec k;
  bool operator<(const BasisKey& o) const { return norm != o.norm ? norm < o.norm : k < o.k; }
  bool operator==(const BasisKey& o) const { return norm == o.norm && k == o.k; }
};

using CohClass = std::map<BasisKey, Rational>;
// Classes whose coefficients are polynomials in z (and possibly lambda).
using CohClassZ = std::map<BasisKey, Poly>;

inline void add_to(CohClass& c, const BasisKey& k, const Rational& v) {
  if (v == 0) return;
  auto [it, fresh] = c.emplace(k, v);
  if (!fresh) {
    it->second += v;
    if (it->second == 0) c.erase(it);
  }
}

// Non-equivariant basis: per degree, representative points and the
// reduction of every phi_k of that degree onto them.
struct NoneqBasis {
  std::vector<std::vector<IntVec>> reps;  // reps[j] = representatives of degree j
  // reduction[k] = coordinates on reps[|k|]
  std::map<IntVec, std::vector<Rational>> reduction;
  int betti(int j) const { return j < static_cast<int>(reps.size()) ? static_cast<int>(reps[j].size()) : 0; }
};

class Cohomology {
 public:
  explicit Cohomology(const Fan& fan) : fan_(&fan) {}

  const Fan& fan() const { return *fan_; }

  BasisKey key(const IntVec& k) const { return {sum(fan_->psi(k)), k}; }

  // phi_a * phi_b: phi_{a+b} when Psi(a) + Psi(b) is supported on a cone.
  std::optional<IntVec> phi_product(const IntVec& a, const IntVec& b) const {
    IntVec s = add(fan_->psi(a), fan_->psi(b));
    std::vector<int> support;
    for (int i = 0; i < fan_->num_rays(); ++i)
      if (s[i] > 0) support.push_back(i);
    if (!fan_->is_face(support)) return std::nullopt;
    return add(a, b);
  }

  // Product of classes; terms with |k| > cap are dropped and counted.
  CohClass multiply(const CohClass& x, const CohClass& y, int cap, long* lost = nullptr) const {
    CohClass out;
    for (const auto& [a, ca] : x)
      for (const auto& [b, cb] : y) {
        if (a.norm + b.norm > cap) {
          if (lost) ++*lost;
          continue;
        }
        if (auto p = phi_product(a.k, b.k)) add_to(out, {a.norm + b.norm, *p}, ca * cb);
      }
    return out;
  }

  CohClass lambda_class(const IntVec& chi) const {
    CohClass c;
    for (int i = 0; i < fan_->num_rays(); ++i) add_to(c, key(fan_->ray(i)), dot(chi, fan_->ray(i)));
    return c;
  }

  // phi_k restricted to the fixed point of cone c: prod_i u_i(x)^{Psi_i(k)}.
  Poly restrict_point(const IntVec& k, int c) const {
    auto w = fixed_point_weights(*fan_, c);
    IntVec psi = fan_->psi(k);
    Poly r(1);
    for (int i = 0; i < fan_->num_rays(); ++i)
      for (int e = 0; e < psi[i]; ++e) r = r * Poly::linear(w[i]);
    return r;
  }

  Poly restrict_fixed_point(const CohClass& x, int c) const {
    Poly r;
    for (const auto& [k, v] : x) r += restrict_point(k.k, c) * v;
    return r;
  }
  Poly restrict_fixed_point(const CohClassZ& x, int c) const {
    Poly r;
    for (const auto& [k, v] : x) r += restrict_point(k.k, c) * v;
    return r;
  }

  // Graded elimination of the linear relations lambda_a * phi_k. Columns are
  // ordered from the largest point down, so pivots land on large points and
  // the representatives are the smallest points of each degree.
  NoneqBasis noneq_basis(int cap) const {
    NoneqBasis nb;
    const int D = fan_->rank();
    auto points = enumerate_points(*fan_, cap);
    std::vector<std::vector<IntVec>> by_degree(cap + 1);
    for (const auto& p : points) by_degree[p.norm].push_back(p.k);
    nb.reps.resize(cap + 1);
    for (int j = 0; j <= cap; ++j) {
      std::vector<IntVec> cols(by_degree[j].rbegin(), by_degree[j].rend());
      std::map<IntVec, size_t> col_of;
      for (size_t t = 0; t < cols.size(); ++t) col_of[cols[t]] = t;
      RatMatrix rel;
      if (j > 0)
        for (const auto& k : by_degree[j - 1])
          for (int a = 0; a < D; ++a) {
            IntVec chi(D, 0);
            chi[a] = 1;
            std::vector<Rational> row(cols.size());
            bool any = false;
            for (int i = 0; i < fan_->num_rays(); ++i) {
              int coef = dot(chi, fan_->ray(i));
              if (!coef) continue;
              if (auto p = phi_product(fan_->ray(i), k)) {
                row[col_of.at(*p)] += coef;
                any = true;
              }
            }
            if (any) rel.push_back(row);
          }
      std::vector<int> piv;
      if (!rel.empty()) piv = row_reduce(rel);
      std::vector<bool> is_piv(cols.size(), false);
      for (int p : piv) is_piv[p] = true;
      std::vector<size_t> free_cols;
      for (size_t t = 0; t < cols.size(); ++t)
        if (!is_piv[t]) free_cols.push_back(t);
      // representatives in canonical (ascending) order
      std::vector<size_t> rep_cols(free_cols.rbegin(), free_cols.rend());
      for (size_t t : rep_cols) nb.reps[j].push_back(cols[t]);
      for (size_t t = 0; t < cols.size(); ++t) {
        std::vector<Rational> coords(rep_cols.size());
        if (!is_piv[t]) {
          for (size_t r = 0; r < rep_cols.size(); ++r)
            if (rep_cols[r] == t) coords[r] = 1;
        } else {
          size_t row = std::find(piv.begin(), piv.end(), static_cast<int>(t)) - piv.begin();
          for (size_t r = 0; r < rep_cols.size(); ++r) coords[r] = -rel[row][rep_cols[r]];
        }
        nb.reduction[cols[t]] = coords;
      }
    }
    return nb;
  }

  // Coordinates of a class in H*(X) per degree, on the representatives.
  std::vector<std::vector<Rational>> noneq_reduce(const CohClass& c, const NoneqBasis& nb) const {
    std::vector<std::vector<Rational>> out(nb.reps.size());
    for (size_t j = 0; j < nb.reps.size(); ++j) out[j].assign(nb.reps[j].size(), 0);
    for (const auto& [k, v] : c) {
      if (k.norm >= static_cast<int>(nb.reps.size())) continue;
      const auto& coords = nb.reduction.at(k.k);
      for (size_t r = 0; r < coords.size(); ++r) out[k.norm][r] += v * coords[r];
    }
    return out;
  }

  // Integral of phi_k over X via localization at a fixed generic lambda.
  Rational integral_of_point(const IntVec& k) const {
    require_compact();
    if (sum(fan_->psi(k)) != fan_->rank()) return 0;
    const auto lam = generic_lambda();
    Rational total = 0;
    for (int c = 0; c < fan_->num_cones(); ++c) {
      Rational num = restrict_point(k, c).evaluate(lam, 1);
      Rational euler = 1;
      auto w = fixed_point_weights(*fan_, c);
      for (int i : fan_->cone(c)) euler *= Poly::linear(w[i]).evaluate(lam, 1);
      total += num / euler;
    }
    return total;
  }

  Rational poincare_integral(const CohClass& c) const {
    require_compact();
    Rational s = 0;
    for (const auto& [k, v] : c)
      if (k.norm == fan_->rank()) s += v * integral_of_point(k.k);
    return s;
  }

 private:
  void require_compact() const {
    if (!fan_->is_complete()) throw Error(ErrorKind::NonCompactFan, "integration needs a complete fan");
  }

  std::vector<Rational> generic_lambda() const {
    const int D = fan_->rank();
    for (int attempt = 1;; ++attempt) {
      std::vector<Rational> lam(D);
      for (int a = 0; a < D; ++a) lam[a] = ratio(attempt * 7 + a * a * 13 + 3 * a + 1, a + 2);
      bool ok = true;
      for (int c = 0; c < fan_->num_cones() && ok; ++c) {
        auto w = fixed_point_weights(*fan_, c);
        for (int i : fan_->cone(c))
          if (Poly::linear(w[i]).evaluate(lam, 1) == 0) ok = false;
      }
      if (ok) return lam;
    }
  }

  const Fan* fan_;
};

}  // namespace toricmirror
