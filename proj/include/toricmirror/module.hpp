#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "toricmirror/cohomology.hpp"
#include "toricmirror/errors.hpp"
#include "toricmirror/fan.hpp"
#include "toricmirror/poly.hpp"

namespace toricmirror {

// A class in H_T(X) written on a free H_T(pt)-basis: one polynomial in
// (lambda, z) per basis element.
using ClassVec = std::vector<Poly>;

inline ClassVec& operator+=(ClassVec& a, const ClassVec& b) {
  for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}
inline ClassVec& operator-=(ClassVec& a, const ClassVec& b) {
  for (size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}
inline ClassVec operator*(const ClassVec& a, const Poly& p) {
  ClassVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] * p;
  return r;
}
inline bool is_zero(const ClassVec& a) {
  for (const auto& p : a)
    if (!p.is_zero()) return false;
  return true;
}

// H_T(X) as a free module over Q[lambda] of rank = number of fixed points.
// Basis: for each maximal cone s, e_s = prod_{i in R(s)} u_i where R(s) are
// the rays of s whose dual vector pairs negatively with a generic
// cocharacter xi. The restriction matrix is triangular in a suitable order,
// so classes are recovered from their fixed-point restrictions by forward
// substitution with exact division by linear forms.
class EquivariantModule {
 public:
  explicit EquivariantModule(const Fan& fan) : fan_(&fan), coh_(fan) {
    if (fan.rank() > Poly::kMaxVars)
      throw Error(ErrorKind::MalformedInput, "rank above " + std::to_string(Poly::kMaxVars) + " is not supported");
    const int D = fan.rank();
    for (int s : {0, 1, 10, 100})
      for (int t = 1; t <= 6; ++t) {
        IntVec xi(D, 0);
        for (int i = 0; i < fan.num_rays(); ++i)
          for (int a = 0; a < D; ++a) xi[a] += s * fan.ray(i)[a];
        int pw = 1;
        for (int a = 0; a < D; ++a, pw *= (t + 1)) xi[a] += pw;
        if (try_basis(xi)) return;
      }
    throw Error(ErrorKind::MalformedInput, "no triangular fixed-point basis found");
  }

  const Fan& fan() const { return *fan_; }
  const Cohomology& cohomology() const { return coh_; }
  int rank() const { return static_cast<int>(points_.size()); }
  int nvars() const { return fan_->rank(); }
  const std::vector<IntVec>& basis_points() const { return points_; }
  int basis_norm(int b) const { return norms_[b]; }
  int max_basis_norm() const { return *std::max_element(norms_.begin(), norms_.end()); }
  int unit_index() const { return unit_; }
  const IntVec& cocharacter() const { return xi_; }
  // Fixed point (maximal cone) attached to basis element b.
  int cone_of(int b) const { return cone_of_[b]; }

  ClassVec zero() const { return ClassVec(rank()); }
  ClassVec unit() const {
    ClassVec v(rank());
    v[unit_] = Poly(1);
    return v;
  }
  ClassVec basis_vector(int b) const {
    ClassVec v(rank());
    v[b] = Poly(1);
    return v;
  }

  Poly restrict(const ClassVec& x, int cone) const {
    Poly r;
    for (int b = 0; b < rank(); ++b)
      if (!x[b].is_zero() && !restriction_[cone][b].is_zero()) r += x[b] * restriction_[cone][b];
    return r;
  }

  std::optional<ClassVec> from_restrictions(const std::vector<Poly>& v) const {
    ClassVec out(rank());
    for (int b = 0; b < rank(); ++b) {
      const int x = cone_of_[b];
      Poly rest = v[x];
      for (int c = 0; c < b; ++c)
        if (!restriction_[x][c].is_zero() && !out[c].is_zero()) rest -= out[c] * restriction_[x][c];
      for (const auto& w : diag_forms_[b]) {
        Poly q;
        if (!rest.divide_by_linear(w, q)) return std::nullopt;
        rest = std::move(q);
      }
      out[b] = std::move(rest);
    }
    // Restrictions at the remaining fixed points must match as well.
    for (int x = 0; x < rank(); ++x)
      if (restrict(out, x) != v[x]) return std::nullopt;
    return out;
  }

  // u_i * x.
  ClassVec mul_u(int i, const ClassVec& x) const {
    ClassVec r(rank());
    for (int b = 0; b < rank(); ++b)
      if (!x[b].is_zero())
        for (int c = 0; c < rank(); ++c)
          if (!u_[i][b][c].is_zero()) r[c].add_product(x[b], u_[i][b][c]);
    return r;
  }

  // phi_k = prod u_i^{Psi_i(k)} as a module element (cached).
  const ClassVec& phi(const IntVec& k) const {
    auto it = phi_cache_.find(k);
    if (it != phi_cache_.end()) return it->second;
    IntVec psi = fan_->psi(k);
    ClassVec v;
    int i = 0;
    while (i < fan_->num_rays() && psi[i] == 0) ++i;
    if (i == fan_->num_rays()) v = unit();
    else v = mul_u(i, phi(sub(k, fan_->ray(i))));
    return phi_cache_.emplace(k, std::move(v)).first->second;
  }

  // Class degree of the term p * e_b is |b| + lambda-degree.
  void truncate(ClassVec& x, int cap) const {
    for (int b = 0; b < rank(); ++b) {
      if (x[b].is_zero()) continue;
      const int room = cap - norms_[b];
      x[b] = room < 0 ? Poly() : x[b].truncate_lambda_degree(room);
    }
  }

  // Expansion in the phi-basis, dropping class degrees above cap.
  CohClassZ to_phi(const ClassVec& x, int cap) const {
    CohClassZ out;
    for (int b = 0; b < rank(); ++b)
      for (const auto& [m, c] : x[b].terms()) {
        const int deg = norms_[b] + Poly::lam_degree(m);
        if (deg > cap) continue;
        const Poly::Mono lam_part = Poly::shift_z(m, -Poly::zexp(m));
        const CohClass& expansion = lambda_times_basis(lam_part, b);
        const Poly zc = Poly::term(c, Poly::mono(Poly::zexp(m)));
        for (const auto& [key, v] : expansion) {
          auto& slot = out[key];
          slot += zc * v;
          if (slot.is_zero()) out.erase(key);
        }
      }
    return out;
  }

  ClassVec from_phi(const CohClassZ& x) const {
    ClassVec out(rank());
    for (const auto& [k, p] : x) out += phi(k.k) * p;
    return out;
  }
  ClassVec from_phi(const CohClass& x) const {
    ClassVec out(rank());
    for (const auto& [k, v] : x) out += phi(k.k) * Poly(v);
    return out;
  }

 private:
  bool try_basis(const IntVec& xi) {
    const Fan& f = *fan_;
    const int nc = f.num_cones();
    std::vector<std::vector<int>> R(nc);
    for (int c = 0; c < nc; ++c) {
      const auto& s = f.cone(c);
      for (size_t t = 0; t < s.size(); ++t) {
        int v = dot(f.dual_basis(c)[t], xi);
        if (v == 0) return false;
        if (v < 0) R[c].push_back(s[t]);
      }
    }
    // Order cones so that R(s) inside cone t forces s before t.
    std::vector<int> order, state(nc, 0);
    bool cyclic = false;
    std::function<void(int)> visit = [&](int c) {
      if (state[c] == 2 || cyclic) return;
      if (state[c] == 1) {
        cyclic = true;
        return;
      }
      state[c] = 1;
      for (int p = 0; p < nc; ++p) {
        if (p == c) continue;
        const auto& t = f.cone(c);
        if (std::includes(t.begin(), t.end(), R[p].begin(), R[p].end())) visit(p);
      }
      state[c] = 2;
      order.push_back(c);
    };
    for (int c = 0; c < nc; ++c) visit(c);
    if (cyclic) return false;

    points_.clear();
    norms_.clear();
    cone_of_ = order;
    diag_forms_.assign(nc, {});
    restriction_.assign(nc, std::vector<Poly>(nc));
    unit_ = -1;
    for (int b = 0; b < nc; ++b) {
      const int c = order[b];
      IntVec psi(f.num_rays(), 0);
      for (int i : R[c]) psi[i] = 1;
      points_.push_back(f.point_of(psi));
      norms_.push_back(static_cast<int>(R[c].size()));
      if (R[c].empty()) unit_ = b;
      auto w = fixed_point_weights(f, c);
      for (int i : R[c]) diag_forms_[b].push_back(w[i]);
    }
    if (unit_ < 0) return false;
    for (int x = 0; x < nc; ++x) {
      auto w = fixed_point_weights(f, x);
      for (int b = 0; b < nc; ++b) {
        Poly p(1);
        for (int i : R[order[b]]) p = p * Poly::linear(w[i]);
        restriction_[x][b] = p;
      }
    }
    // Basis check: u_i e_b must be expressible for every i, b.
    u_.assign(f.num_rays(), std::vector<ClassVec>(nc));
    for (int i = 0; i < f.num_rays(); ++i)
      for (int b = 0; b < nc; ++b) {
        std::vector<Poly> v(nc);
        for (int x = 0; x < nc; ++x) v[x] = restriction_[x][b] * Poly::linear(fixed_point_weights(f, x)[i]);
        auto sol = from_restrictions(v);
        if (!sol) return false;
        u_[i][b] = *sol;
      }
    xi_ = xi;
    phi_cache_.clear();
    return true;
  }

  const CohClass& lambda_times_basis(Poly::Mono lam, int b) const {
    auto key = std::make_pair(lam, b);
    auto it = lam_cache_.find(key);
    if (it != lam_cache_.end()) return it->second;
    CohClass v;
    int a = 0;
    while (a < nvars() && Poly::lam_exp(lam, a) == 0) ++a;
    if (a == nvars()) {
      v[coh_.key(points_[b])] = 1;
    } else {
      IntVec unit_exp(nvars(), 0);
      unit_exp[a] = 1;
      const Poly::Mono lower = lam - (Poly::mono(0, unit_exp) - Poly::kZeroZ);
      IntVec chi(nvars(), 0);
      chi[a] = 1;
      v = coh_.multiply(coh_.lambda_class(chi), lambda_times_basis(lower, b), 1 << 20);
    }
    return lam_cache_.emplace(key, std::move(v)).first->second;
  }

  const Fan* fan_;
  Cohomology coh_;
  IntVec xi_;
  std::vector<IntVec> points_;
  std::vector<int> norms_;
  std::vector<int> cone_of_;
  int unit_ = -1;
  std::vector<std::vector<IntVec>> diag_forms_;
  std::vector<std::vector<Poly>> restriction_;  // [cone][basis]
  std::vector<std::vector<ClassVec>> u_;        // [ray][basis] -> u_i e_b
  mutable std::map<IntVec, ClassVec> phi_cache_;
  mutable std::map<std::pair<Poly::Mono, int>, CohClass> lam_cache_;
};

}  // namespace toricmirror
