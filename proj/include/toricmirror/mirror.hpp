#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "toricmirror/cohomology.hpp"
#include "toricmirror/errors.hpp"
#include "toricmirror/fan.hpp"
#include "toricmirror/module.hpp"
#include "toricmirror/poly.hpp"
#include "toricmirror/series.hpp"

namespace toricmirror {

// Monomials Q^d y^l of the internal expansion: d effective with
// theta-degree <= qcap, l a multi-index over the tracked variables with
// |l| <= gmax. Ids are d_index * num_l + l_index.
class MonoTable {
 public:
  MonoTable() = default;
  MonoTable(const Fan& f, const std::vector<Var>& vars, int qcap, int gmax) {
    for (const auto& c : enumerate_effective(f, qcap)) {
      d_index_[c.d] = static_cast<int>(ds_.size());
      ds_.push_back(c.d);
    }
    const size_t nv = vars.size();
    std::vector<IntVec> cur{IntVec(nv, 0)};
    std::set<IntVec> seen(cur.begin(), cur.end());
    ls_.push_back(cur[0]);
    for (int deg = 1; deg <= gmax; ++deg) {
      std::set<IntVec> next;
      for (const auto& l : cur)
        for (size_t j = 0; j < nv; ++j) {
          IntVec n = l;
          ++n[j];
          next.insert(n);
        }
      // Descending lex order puts y_0^deg first.
      std::vector<IntVec> level(next.rbegin(), next.rend());
      for (const auto& l : level) ls_.push_back(l);
      cur = level;
    }
    for (size_t t = 0; t < ls_.size(); ++t) l_index_[ls_[t]] = static_cast<int>(t);
    nl_ = static_cast<int>(ls_.size());

    const int n = size();
    order_.resize(n);
    weight_.resize(n);
    gdeg_.resize(n);
    for (int id = 0; id < n; ++id) {
      const IntVec& d = ds_[id / nl_];
      const IntVec& l = ls_[id % nl_];
      gdeg_[id] = sum(l);
      order_[id] = f.theta_degree(d) + gdeg_[id];
      int w = f.c1_degree(d);
      for (size_t j = 0; j < nv; ++j) w += l[j] * (1 - vars[j].norm - vars[j].n);
      weight_[id] = w;
      by_order_.push_back(id);
    }
    std::stable_sort(by_order_.begin(), by_order_.end(), [&](int a, int b) { return order_[a] < order_[b]; });

    // Splittings of d and of l.
    std::vector<std::vector<std::pair<int, int>>> dsplit(ds_.size()), lsplit(ls_.size());
    for (size_t a = 0; a < ds_.size(); ++a)
      for (size_t b = 0; b < ds_.size(); ++b) {
        auto it = d_index_.find(add(ds_[a], ds_[b]));
        if (it != d_index_.end()) dsplit[it->second].push_back({static_cast<int>(a), static_cast<int>(b)});
      }
    for (size_t t = 0; t < ls_.size(); ++t) {
      const IntVec& l = ls_[t];
      IntVec a(nv, 0);
      for (;;) {
        lsplit[t].push_back({l_index_.at(a), l_index_.at(sub(l, a))});
        size_t j = 0;
        while (j < nv) {
          if (++a[j] <= l[j]) break;
          a[j] = 0;
          ++j;
        }
        if (j == nv) break;
      }
    }
    splits_.resize(n);
    for (int id = 0; id < n; ++id)
      for (const auto& [da, db] : dsplit[id / nl_])
        for (const auto& [la, lb] : lsplit[id % nl_]) splits_[id].push_back({da * nl_ + la, db * nl_ + lb});
  }

  int size() const { return static_cast<int>(ds_.size()) * nl_; }
  int num_l() const { return nl_; }
  const IntVec& d(int id) const { return ds_[id / nl_]; }
  const IntVec& l(int id) const { return ls_[id % nl_]; }
  int gdeg(int id) const { return gdeg_[id]; }
  int order(int id) const { return order_[id]; }
  // Half the grading degree of the monomial.
  int weight(int id) const { return weight_[id]; }
  const std::vector<int>& by_order() const { return by_order_; }
  // All (a, b) with mono a * mono b = mono id.
  const std::vector<std::pair<int, int>>& splits(int id) const { return splits_[id]; }
  int max_order() const { return order_.empty() ? 0 : *std::max_element(order_.begin(), order_.end()); }
  int min_weight() const { return weight_.empty() ? 0 : *std::min_element(weight_.begin(), weight_.end()); }

  int find(const IntVec& d, const IntVec& l) const {
    auto a = d_index_.find(d);
    auto b = l_index_.find(l);
    if (a == d_index_.end() || b == l_index_.end()) return -1;
    return a->second * nl_ + b->second;
  }
  // Id of Q^dd y^dl times mono id, or -1 when it leaves the table.
  int shift(int id, const IntVec& dd, const IntVec& dl) const { return find(add(d(id), dd), add(l(id), dl)); }

 private:
  std::vector<IntVec> ds_, ls_;
  std::map<IntVec, int> d_index_, l_index_;
  int nl_ = 0;
  std::vector<int> order_, weight_, gdeg_, by_order_;
  std::vector<std::vector<std::pair<int, int>>> splits_;
};

// A series sum_mono Q^d y^l * (class), one class per mono id.
using MSeries = std::vector<ClassVec>;
// A scalar series; coefficients are polynomials in z (and lambda where noted).
using MScalar = std::vector<Poly>;
// An operator on the module basis, stored by columns.
using MMatrix = std::vector<MSeries>;

inline bool is_zero(const MSeries& s) {
  for (const auto& v : s)
    if (!is_zero(v)) return false;
  return true;
}

// Primitive-form data from the two routes.
struct RouteA {
  std::map<IntVec, MScalar> c;  // coefficients of w^{Psi(k)} omega, z-polynomial
};
struct RouteB {
  std::map<std::pair<IntVec, int>, MScalar> y;  // y_{k,n} as series in (Q, y)
  MSeries tau;                                   // z^0 coefficient of the normalized I
};

// Divisor-variable bookkeeping: a slice series rewritten with the ray
// variables y_1..y_m restored, plus logarithmic terms.
struct RestoredTerm {
  BasisKey k;
  int z = 0;
  IntVec d;
  IntVec ray_exp;  // exponents of y_{b_i}, possibly negative
  IntVec g;
  Rational c;
};
struct RestoredSeries {
  std::vector<RestoredTerm> terms;
  std::vector<std::pair<int, CohClass>> logs;  // (i, class) means class * log y_{b_i}
};

class MirrorEngine {
 public:
  // tracked: optional override of the deformation directions (non-ray
  // points); defaults to every non-ray point with |k| <= Kvar.
  MirrorEngine(const Fan& fan, TruncationPolicy policy, std::optional<std::vector<IntVec>> tracked = std::nullopt)
      : fan_(&fan), policy_(policy), mod_(fan) {
    policy_.validate();
    if (tracked) {
      std::set<IntVec> rays(fan.rays().begin(), fan.rays().end());
      for (const auto& k : *tracked) {
        auto p = point_data(fan, k);
        if (rays.count(k)) throw Error(ErrorKind::MalformedInput, "ray " + to_string(k) + " cannot be a tracked variable");
        vars_.push_back({k, 0, p.norm});
      }
    } else {
      vars_ = tracked_variables(fan, policy_.kvar);
    }
    gint_ = policy_.gcap + 1;
    mt_ = MonoTable(fan, vars_, policy_.qcap, gint_);
    kint_ = std::max(policy_.kcoh + policy_.kvar, fan.rank() + 1) + std::max(0, -mt_.min_weight()) + 1;
    space_ = std::make_shared<const SeriesSpace>(fan, policy_, vars_);
    build_faces();
    factorize();
    build_ray_operators();
  }

  const Fan& fan() const { return *fan_; }
  const TruncationPolicy& policy() const { return policy_; }
  const std::vector<Var>& vars() const { return vars_; }
  const EquivariantModule& module() const { return mod_; }
  const MonoTable& monos() const { return mt_; }
  const HSeries::Space& space() const { return space_; }
  int rank() const { return mod_.rank(); }
  int internal_degree() const { return kint_; }
  int guard_order() const { return gint_; }
  int size() const { return mt_.size(); }

  // ---- series helpers -------------------------------------------------

  MSeries zero_series() const { return MSeries(mt_.size(), mod_.zero()); }
  MScalar zero_scalar() const { return MScalar(mt_.size()); }
  MSeries constant_series(const ClassVec& v) const {
    MSeries s = zero_series();
    s[0] = v;
    return s;
  }

  void truncate(ClassVec& v) const { mod_.truncate(v, kint_); }

  // Sum over mono splittings of A[l][a] * v[b][l].
  MSeries apply(const MMatrix& A, const MSeries& v) const {
    MSeries out = zero_series();
    const int r = rank();
    for (int id = 0; id < mt_.size(); ++id) {
      std::vector<Poly::Builder> acc(r);
      for (const auto& [a, b] : mt_.splits(id))
        for (int l = 0; l < r; ++l) {
          const Poly& coef = v[b][l];
          if (coef.is_zero()) continue;
          for (int c = 0; c < r; ++c)
            if (!A[l][a][c].is_zero()) acc[c].add_product(A[l][a][c], coef, room(c));
        }
      for (int c = 0; c < r; ++c) out[id][c] = acc[c].build();
    }
    return out;
  }

  // Scalar series times class series.
  MSeries scale(const MScalar& s, const MSeries& v) const {
    MSeries out = zero_series();
    const int r = rank();
    for (int id = 0; id < mt_.size(); ++id) {
      std::vector<Poly::Builder> acc(r);
      for (const auto& [a, b] : mt_.splits(id)) {
        if (s[a].is_zero()) continue;
        for (int c = 0; c < r; ++c)
          if (!v[b][c].is_zero()) acc[c].add_product(s[a], v[b][c], room(c));
      }
      for (int c = 0; c < r; ++c) out[id][c] = acc[c].build();
    }
    return out;
  }

  MScalar multiply(const MScalar& s, const MScalar& t) const {
    MScalar out = zero_scalar();
    for (int id = 0; id < mt_.size(); ++id) {
      Poly::Builder acc;
      for (const auto& [a, b] : mt_.splits(id))
        if (!s[a].is_zero() && !t[b].is_zero()) acc.add_product(s[a], t[b]);
      out[id] = acc.build();
    }
    return out;
  }

  // d/dy_j; exact for monos with |l| < guard order.
  template <class T>
  std::vector<T> derive(const std::vector<T>& v, int j) const {
    std::vector<T> out(mt_.size(), empty_like(v[0]));
    IntVec e(vars_.size(), 0);
    e[j] = 1;
    for (int id = 0; id < mt_.size(); ++id) {
      int up = mt_.shift(id, IntVec(fan_->num_rays(), 0), e);
      if (up < 0) continue;
      out[id] = multiply_by(v[up], Rational(mt_.l(id)[j] + 1));
    }
    return out;
  }

  // Multiplication by Q^dd y^dl; terms leaving the table are dropped.
  template <class T>
  std::vector<T> shift(const std::vector<T>& v, const IntVec& dd, const IntVec& dl) const {
    std::vector<T> out(mt_.size(), empty_like(v[0]));
    for (int id = 0; id < mt_.size(); ++id) {
      int to = mt_.shift(id, dd, dl);
      if (to >= 0) out[to] = v[id];
    }
    return out;
  }
  template <class T>
  std::vector<T> times_var(const std::vector<T>& v, int j) const {
    IntVec e(vars_.size(), 0);
    e[j] = 1;
    return shift(v, IntVec(fan_->num_rays(), 0), e);
  }

  // ---- the I-function ---------------------------------------------------

  // d^alpha I / dy_alpha at the base slice, coefficient of mono id. Ray
  // entries of alpha differentiate in the ray variables (y_{b_i} = 1).
  ClassVec bump(const std::vector<IntVec>& alpha, int id) const {
    const int m = fan_->num_rays();
    const IntVec& d = mt_.d(id);
    const IntVec& l = mt_.l(id);
    IntVec n = d;
    for (size_t j = 0; j < vars_.size(); ++j)
      if (l[j]) {
        const IntVec psi = fan_->psi(vars_[j].point);
        for (int i = 0; i < m; ++i) n[i] -= l[j] * psi[i];
      }
    for (const auto& p : alpha) {
      const IntVec psi = fan_->psi(p);
      for (int i = 0; i < m; ++i) n[i] -= psi[i];
    }
    Rational coef = 1;
    for (int x : l) coef /= factorial(x);
    const int zbase = 1 - sum(l) - static_cast<int>(alpha.size());

    std::map<IntVec, Poly::Builder> acc;
    IntVec a(m, 0);
    std::function<void(int, unsigned, int, const Rational&, int)> rec = [&](int i, unsigned mask, int deg,
                                                                           const Rational& c, int ze) {
      if (i == m) {
        acc[a].add_term(Poly::mono(ze), c);
        return;
      }
      const auto& tbl = factor(n[i]);
      for (size_t j = 0; j < tbl.size(); ++j) {
        if (deg + static_cast<int>(j) > kint_) break;
        if (tbl[j] == 0) continue;
        unsigned nm = j > 0 ? (mask | (1u << i)) : mask;
        if (j > 0 && !faces_[nm]) break;
        a[i] = static_cast<int>(j);
        rec(i + 1, nm, deg + static_cast<int>(j), c * tbl[j], ze - n[i] - static_cast<int>(j));
      }
      a[i] = 0;
    };
    rec(0, 0u, 0, coef, zbase);

    const int r = rank();
    std::vector<Poly::Builder> out(r);
    for (auto& [exps, b] : acc) {
      Poly zp = b.build();
      if (zp.is_zero()) continue;
      const ClassVec& ph = mod_.phi(fan_->point_of(exps));
      for (int c = 0; c < r; ++c)
        if (!ph[c].is_zero()) out[c].add_product(ph[c], zp);
    }
    ClassVec v(r);
    for (int c = 0; c < r; ++c) v[c] = out[c].build();
    return v;
  }

  MSeries bump_series(const std::vector<IntVec>& alpha) const {
    MSeries s = zero_series();
    for (int id = 0; id < mt_.size(); ++id) s[id] = bump(alpha, id);
    return s;
  }

  const MSeries& I() const {
    if (!I_) I_ = bump_series({});
    return *I_;
  }
  MSeries& mutable_I() {
    I();
    return *I_;
  }

  // Column phi_k of dI.
  const MSeries& dI_column(const IntVec& k) const {
    auto it = dcache_.find(k);
    if (it != dcache_.end()) return it->second;
    return dcache_.emplace(k, bump_series({k})).first->second;
  }

  // ---- Birkhoff factorization -----------------------------------------

  const MMatrix& D() const { return D_; }
  const MMatrix& M() const { return M_; }
  const MMatrix& P() const { return P_; }
  MMatrix& mutable_P() { return P_; }
  MMatrix& mutable_M() { return M_; }

  // Factors D = M P with M = Id + O(1/z) and P polynomial in z, order by
  // order. The order-zero part P0 must be unipotent.
  std::pair<MMatrix, MMatrix> birkhoff(const MMatrix& D) const {
    const int r = rank();
    MMatrix M(r, zero_series()), P(r, zero_series());
    std::vector<ClassVec> P0(r), P0inv(r);
    for (int j = 0; j < r; ++j) P0[j] = D[j][0];
    P0inv = unipotent_inverse(P0);
    for (int j = 0; j < r; ++j) {
      M[j][0] = mod_.basis_vector(j);
      P[j][0] = P0[j];
    }
    const bool trivial = is_identity(P0);
    for (int id : mt_.by_order()) {
      if (id == 0) continue;
      std::vector<ClassVec> R(r);
      for (int j = 0; j < r; ++j) {
        std::vector<Poly::Builder> acc(r);
        for (const auto& [a, b] : mt_.splits(id)) {
          if (a == 0 || b == 0) continue;
          for (int l = 0; l < r; ++l) {
            const Poly& coef = P[j][b][l];
            if (coef.is_zero()) continue;
            for (int c = 0; c < r; ++c)
              if (!M[l][a][c].is_zero()) acc[c].add_product(M[l][a][c], coef, room(c));
          }
        }
        R[j] = D[j][id];
        for (int c = 0; c < r; ++c) R[j][c] -= acc[c].build();
        truncate(R[j]);
      }
      std::vector<ClassVec> X = trivial ? R : times_small(R, P0inv);
      for (int j = 0; j < r; ++j) {
        ClassVec mneg(r);
        for (int c = 0; c < r; ++c) mneg[c] = X[j][c].z_negative();
        M[j][id] = mneg;
      }
      std::vector<ClassVec> MP0 = trivial ? std::vector<ClassVec>() : times_small(M_column_slice(M, id), P0);
      for (int j = 0; j < r; ++j) {
        ClassVec p = R[j];
        if (trivial) p -= M[j][id];
        else p -= MP0[j];
        truncate(p);
        for (int c = 0; c < r; ++c)
          if (!p[c].z_negative().is_zero())
            throw Error(ErrorKind::NegativePowerInP, "negative z power in P at order " + std::to_string(mt_.order(id)));
        P[j][id] = p;
      }
    }
    return {M, P};
  }

  // M P - D for every column and mono.
  MMatrix residual(const MMatrix& D, const MMatrix& M, const MMatrix& P) const {
    const int r = rank();
    MMatrix out(r, zero_series());
    for (int j = 0; j < r; ++j)
      for (int id = 0; id < mt_.size(); ++id) {
        std::vector<Poly::Builder> acc(r);
        for (const auto& [a, b] : mt_.splits(id))
          for (int l = 0; l < r; ++l) {
            const Poly& coef = P[j][b][l];
            if (coef.is_zero()) continue;
            for (int c = 0; c < r; ++c)
              if (!M[l][a][c].is_zero()) acc[c].add_product(M[l][a][c], coef, room(c));
          }
        ClassVec v(r);
        for (int c = 0; c < r; ++c) v[c] = acc[c].build() - D[j][id][c];
        truncate(v);
        out[j][id] = v;
      }
    return out;
  }

  // Column phi_k of P, by forward substitution in dI(phi_k) = M P(phi_k).
  const MSeries& P_column(const IntVec& k) const {
    auto it = pcache_.find(k);
    if (it != pcache_.end()) return it->second;
    return pcache_.emplace(k, solve_P_column(k)).first->second;
  }
  // Uncached forward solve.
  MSeries solve_P_column(const IntVec& k) const {
    const MSeries& col = dI_column(k);
    const int r = rank();
    MSeries out = zero_series();
    for (int id : mt_.by_order()) {
      std::vector<Poly::Builder> acc(r);
      for (const auto& [a, b] : mt_.splits(id)) {
        if (a == 0) continue;
        for (int l = 0; l < r; ++l) {
          const Poly& coef = out[b][l];
          if (coef.is_zero()) continue;
          for (int c = 0; c < r; ++c)
            if (!M_[l][a][c].is_zero()) acc[c].add_product(M_[l][a][c], coef, room(c));
        }
      }
      ClassVec x = col[id];
      for (int c = 0; c < r; ++c) x[c] -= acc[c].build();
      truncate(x);
      for (int c = 0; c < r; ++c)
        if (!x[c].z_negative().is_zero())
          throw Error(ErrorKind::NegativePowerInP, "column " + to_string(k) + " has a negative z power at order " +
                                                       std::to_string(mt_.order(id)));
      out[id] = x;
    }
    return out;
  }
  std::map<IntVec, MSeries>& mutable_P_cache() { return pcache_; }

  // ---- mirror map, Seidel elements, quantum product -------------------

  MSeries tau() const {
    MSeries t = zero_series();
    const int u = mod_.unit_index();
    for (int id = 0; id < mt_.size(); ++id)
      for (int c = 0; c < rank(); ++c) t[id][c] = M_[u][id][c].z_coefficient(-1);
    return t;
  }
  MSeries upsilon() const { return P_[mod_.unit_index()]; }

  // A_i: quantum multiplication by S_{b_i}, from M A_i = (u_i + z D_i) M.
  const MMatrix& ray_operator(int i) const { return A_[i]; }
  std::vector<MMatrix>& mutable_ray_operators() { return A_; }

  // Pairing of mono id with the divisor derivative D_i.
  int divisor_weight(int i, int id) const {
    int w = mt_.d(id)[i];
    const IntVec& l = mt_.l(id);
    for (size_t j = 0; j < vars_.size(); ++j)
      if (l[j]) w -= l[j] * fan_->psi(vars_[j].point)[i];
    return w;
  }

  // prod_i A_i^{e_i} applied to v.
  MSeries apply_rays(const IntVec& e, MSeries v) const {
    for (int i = 0; i < fan_->num_rays(); ++i)
      for (int t = 0; t < e[i]; ++t) v = apply(A_[i], v);
    return v;
  }

  // Seidel element S_k = prod_i S_{b_i}^{Psi_i(k)} (the cocycle vanishes
  // inside a cone).
  const MSeries& seidel(const IntVec& k) const {
    auto it = scache_.find(k);
    if (it != scache_.end()) return it->second;
    MSeries s = apply_rays(fan_->psi(k), constant_series(mod_.unit()));
    return scache_.emplace(k, std::move(s)).first->second;
  }
  std::map<IntVec, MSeries>& mutable_seidel_cache() { return scache_; }
  void clear_derived_caches() const { scache_.clear(); }

  // Coordinates of x on the Seidel basis {S_{p_b}} over Q[lambda][[Q, y]].
  std::vector<MScalar> seidel_coordinates(const MSeries& x) const {
    const int r = rank();
    std::vector<MScalar> alpha(r, zero_scalar());
    std::vector<const MSeries*> S(r);
    for (int b = 0; b < r; ++b) S[b] = &seidel(mod_.basis_points()[b]);
    for (int id : mt_.by_order()) {
      std::vector<Poly::Builder> acc(r);
      for (const auto& [a, bb] : mt_.splits(id)) {
        if (a == 0) continue;
        for (int b = 0; b < r; ++b) {
          const Poly& coef = alpha[b][bb];
          if (coef.is_zero()) continue;
          for (int c = 0; c < r; ++c)
            if (!(*S[b])[a][c].is_zero()) acc[c].add_product((*S[b])[a][c], coef);
        }
      }
      ClassVec rem = x[id];
      for (int c = 0; c < r; ++c) rem[c] -= acc[c].build();
      truncate(rem);
      for (int c = 0; c < r; ++c) alpha[c][id] = rem[c];
    }
    return alpha;
  }

  // Big equivariant quantum product x * y at tau(y).
  MSeries qproduct(const MSeries& x, const MSeries& y) const {
    auto alpha = seidel_coordinates(x);
    MSeries out = zero_series();
    for (int b = 0; b < rank(); ++b) {
      if (is_zero(alpha[b])) continue;
      MSeries t = apply_rays(fan_->psi(mod_.basis_points()[b]), y);
      MSeries s = scale(alpha[b], t);
      for (int id = 0; id < mt_.size(); ++id) out[id] += s[id];
    }
    return out;
  }

  MSeries from_class(const CohClass& c) const { return constant_series(mod_.from_phi(c)); }

  // ---- conversion to phi-basis series ----------------------------------

  // Exact conversion: classes of degree <= Kcoh, G-degree <= Gcap, z window.
  HSeries to_series(const MSeries& v) const {
    HSeries s(space_);
    const int kcoh = policy_.kcoh;
    for (int id = 0; id < mt_.size(); ++id) {
      if (is_zero(v[id])) continue;
      if (mt_.gdeg(id) > policy_.gcap) {
        ++s.loss().gcap;
        continue;
      }
      for (int b = 0; b < rank(); ++b)
        for (const auto& [m, c] : v[id][b].terms())
          if (mod_.basis_norm(b) + Poly::lam_degree(m) > kcoh) ++s.loss().kcoh;
      for (const auto& [key, p] : mod_.to_phi(v[id], kcoh))
        for (const auto& [m, c] : p.terms())
          s.add_term({key, Poly::zexp(m), mt_.d(id), mt_.l(id)}, c);
    }
    return s;
  }

  // Lambda-free scalar series (coefficients polynomial in z).
  HSeries scalar_to_series(const MScalar& v) const {
    HSeries s(space_);
    const SeriesKey unit = s.unit_key();
    for (int id = 0; id < mt_.size(); ++id) {
      if (v[id].is_zero()) continue;
      if (mt_.gdeg(id) > policy_.gcap) {
        ++s.loss().gcap;
        continue;
      }
      for (const auto& [m, c] : v[id].terms()) {
        if (Poly::lam_degree(m) != 0)
          throw Error(ErrorKind::MalformedInput, "scalar series carries an equivariant parameter");
        s.add_term({unit.k, Poly::zexp(m), mt_.d(id), mt_.l(id)}, c);
      }
    }
    return s;
  }

  OperatorSeries columns_to_operator(const std::vector<IntVec>& ks,
                                     const std::function<const MSeries&(const IntVec&)>& col) const {
    OperatorSeries op;
    for (const auto& k : ks) {
      op.columns.push_back(k);
      op.entries.push_back(to_series(col(k)));
    }
    return op;
  }

  std::vector<IntVec> points_up_to(int cap) const {
    std::vector<IntVec> out;
    for (const auto& p : enumerate_points(*fan_, cap)) out.push_back(p.k);
    return out;
  }

  // M as an operator on phi_k, |k| <= Kcoh.
  OperatorSeries M_operator() const {
    std::map<IntVec, MSeries> cols;
    for (const auto& k : points_up_to(policy_.kcoh)) {
      const ClassVec& ph = mod_.phi(k);
      MSeries s = zero_series();
      for (int id = 0; id < mt_.size(); ++id) {
        std::vector<Poly::Builder> acc(rank());
        for (int l = 0; l < rank(); ++l)
          if (!ph[l].is_zero())
            for (int c = 0; c < rank(); ++c)
              if (!M_[l][id][c].is_zero()) acc[c].add_product(M_[l][id][c], ph[l], room(c));
        for (int c = 0; c < rank(); ++c) s[id][c] = acc[c].build();
      }
      cols.emplace(k, std::move(s));
    }
    return columns_to_operator(points_up_to(policy_.kcoh), [&](const IntVec& k) -> const MSeries& { return cols.at(k); });
  }

  // ---- mirror coordinates and inverse map ------------------------------

  // t_j(y): the phi_{k_j}-coefficient of tau for tracked k_j.
  ScalarFamily mirror_coordinates(const HSeries& tau_series) const {
    ScalarFamily t;
    for (size_t j = 0; j < vars_.size(); ++j) {
      HSeries s(space_);
      const SeriesKey unit = s.unit_key();
      for (const auto& [key, c] : tau_series.terms())
        if (key.k.k == vars_[j].point) s.add_term({unit.k, key.z, key.d, key.g}, c);
      t.emplace(static_cast<int>(j), s);
    }
    return t;
  }

  ScalarFamily inverse_mirror_map() const { return invert(mirror_coordinates(to_series(tau()))); }

  // Both sides of sum_i S_{b_i} + sum_k y_k S_k = c1 + sum_k (1 - |k|) t_k phi_k.
  std::pair<HSeries, HSeries> euler_identity() const {
    MSeries lhs = zero_series();
    for (const auto& b : fan_->rays()) {
      const MSeries& s = seidel(b);
      for (int id = 0; id < mt_.size(); ++id) lhs[id] += s[id];
    }
    for (size_t j = 0; j < vars_.size(); ++j) {
      MSeries s = times_var(seidel(vars_[j].point), static_cast<int>(j));
      for (int id = 0; id < mt_.size(); ++id) lhs[id] += s[id];
    }
    HSeries rhs(space_);
    const SeriesKey unit = rhs.unit_key();
    for (const auto& b : fan_->rays()) {
      SeriesKey key = unit;
      key.k = mod_.cohomology().key(b);
      rhs.add_term(key, 1);
    }
    const HSeries t = to_series(tau());
    for (const auto& [key, c] : t.terms()) rhs.add_term(key, c * (1 - key.k.norm));
    return {to_series(lhs), rhs};
  }

  // ---- primitive form --------------------------------------------------

  // Route A: sum_k c_k P(phi_k) = 1, solved degree by degree from the top.
  RouteA primitive_form_solve() const {
    RouteA out;
    const int r = rank();
    auto coeff = [&](const IntVec& k) -> MScalar& {
      auto it = out.c.find(k);
      if (it == out.c.end()) it = out.c.emplace(k, zero_scalar()).first;
      return it->second;
    };
    for (int id : mt_.by_order()) {
      std::vector<Poly::Builder> acc(r);
      for (const auto& [k, c] : out.c) {
        const MSeries& P = P_column(k);
        for (const auto& [a, b] : mt_.splits(id)) {
          if (a == 0 || c[b].is_zero()) continue;
          for (int t = 0; t < r; ++t)
            if (!P[a][t].is_zero()) acc[t].add_product(P[a][t], c[b], room(t));
        }
      }
      ClassVec rem = id == 0 ? mod_.unit() : mod_.zero();
      for (int t = 0; t < r; ++t) rem[t] -= acc[t].build();
      truncate(rem);
      for (int guard = 0; !is_zero(rem); ++guard) {
        if (guard > 4 * (kint_ + 2))
          throw Error(ErrorKind::NonPolynomialCoefficient, "triangular solve did not terminate");
        CohClassZ ph = mod_.to_phi(rem, kint_);
        if (ph.empty()) break;
        const int top = ph.rbegin()->first.norm;
        for (const auto& [key, f] : ph) {
          if (key.norm != top) continue;
          if (!f.z_negative().is_zero())
            throw Error(ErrorKind::NonPolynomialCoefficient,
                        "coefficient of " + to_string(key.k) + " has a negative z power");
          coeff(key.k)[id] += f;
          ClassVec sub = P_column(key.k)[0] * f;
          rem -= sub;
        }
        truncate(rem);
      }
    }
    for (auto it = out.c.begin(); it != out.c.end();) it = is_zero(it->second) ? out.c.erase(it) : std::next(it);
    return out;
  }

  // sum_k c_k P(phi_k) - 1.
  MSeries primitive_form_residual(const RouteA& ra) const {
    MSeries out = zero_series();
    for (const auto& [k, c] : ra.c) {
      MSeries s = scale(c, P_column(k));
      for (int id = 0; id < mt_.size(); ++id) out[id] += s[id];
    }
    out[0] -= mod_.unit();
    for (auto& v : out) truncate(v);
    return out;
  }

  // Route B: y_k -> y_k + sum_n y_{k,n} z^n chosen so that I has no z^n,
  // n >= 1, beyond z * 1.
  RouteB primitive_form_normalize() const {
    RouteB out;
    out.tau = zero_series();
    const int r = rank();
    std::map<IntVec, MScalar> delta;
    std::map<std::pair<std::vector<IntVec>, int>, ClassVec> bump_cache;
    auto cached_bump = [&](const std::vector<IntVec>& alpha, int id) -> const ClassVec& {
      auto key = std::make_pair(alpha, id);
      auto it = bump_cache.find(key);
      if (it == bump_cache.end()) it = bump_cache.emplace(key, bump(alpha, id)).first;
      return it->second;
    };
    const MSeries& I0 = I();
    int level = -1;
    std::map<std::vector<IntVec>, MScalar> powers;  // delta^alpha / alpha!
    for (int id : mt_.by_order()) {
      if (mt_.order(id) != level) {
        level = mt_.order(id);
        powers = delta_powers(delta);
      }
      std::vector<Poly::Builder> acc(r);
      for (const auto& [alpha, pw] : powers)
        for (const auto& [a, b] : mt_.splits(id)) {
          if (pw[b].is_zero()) continue;
          const ClassVec& bv = cached_bump(alpha, a);
          for (int t = 0; t < r; ++t)
            if (!bv[t].is_zero()) acc[t].add_product(bv[t], pw[b], room(t));
        }
      ClassVec X = I0[id];
      for (int t = 0; t < r; ++t) X[t] += acc[t].build();
      truncate(X);
      if (id == 0) X -= mod_.unit() * Poly::z_power(1);
      for (int guard = 0;; ++guard) {
        if (guard > 4 * (kint_ + 2))
          throw Error(ErrorKind::NormalizationFailure, "normalization did not terminate");
        ClassVec pos(r);
        for (int t = 0; t < r; ++t) pos[t] = X[t].filter([](Poly::Mono m) { return Poly::zexp(m) >= 1; });
        CohClassZ ph = mod_.to_phi(pos, kint_);
        if (ph.empty()) {
          if (!is_zero(pos))
            throw Error(ErrorKind::NormalizationFailure, "positive z powers above the internal degree");
          break;
        }
        const int top = ph.rbegin()->first.norm;
        for (const auto& [key, f] : ph) {
          if (key.norm != top) continue;
          const ClassVec& lead = cached_bump({key.k}, 0);
          for (const auto& [m, c] : f.terms()) {
            const int n = Poly::zexp(m);
            if (n < 1) continue;
            auto& slot = out.y[{key.k, n}];
            if (slot.empty()) slot = zero_scalar();
            // The shift y_k -> y_k + y_{k,n} z^n adds y_{k,n} z^n * dI(phi_k).
            slot[id] -= Poly(c);
            auto& dk = delta[key.k];
            if (dk.empty()) dk = zero_scalar();
            dk[id] -= Poly::term(c, Poly::mono(n));
            X -= lead * Poly::term(c, Poly::mono(n));
          }
        }
        truncate(X);
      }
      for (int t = 0; t < r; ++t) out.tau[id][t] = X[t].z_coefficient(0);
    }
    for (auto it = out.y.begin(); it != out.y.end();) it = is_zero(it->second) ? out.y.erase(it) : std::next(it);
    return out;
  }

  // ---- divisor variables ------------------------------------------------

  // prefactor: extra y^{-prefactor} (Psi(k) for a Seidel element S_k).
  RestoredSeries restore_divisor_variables(const HSeries& s, bool add_log_terms, const IntVec& prefactor = {}) const {
    RestoredSeries out;
    const int m = fan_->num_rays();
    for (const auto& [key, c] : s.terms()) {
      RestoredTerm t{key.k, key.z, key.d, prefactor.empty() ? key.d : sub(key.d, prefactor), key.g, c};
      for (size_t j = 0; j < vars_.size(); ++j)
        if (key.g[j]) {
          const IntVec psi = fan_->psi(vars_[j].point);
          for (int i = 0; i < m; ++i) t.ray_exp[i] -= key.g[j] * psi[i];
        }
      out.terms.push_back(t);
    }
    if (add_log_terms)
      for (int i = 0; i < m; ++i) out.logs.push_back({i, CohClass{{mod_.cohomology().key(fan_->ray(i)), 1}}});
    return out;
  }

  // Back to the slice y_{b_i} = 1; logarithms vanish there.
  HSeries to_slice(const RestoredSeries& r) const {
    HSeries s(space_);
    for (const auto& t : r.terms) s.add_term({t.k, t.z, t.d, t.g}, t.c);
    return s;
  }

 private:
  void build_faces() {
    const int m = fan_->num_rays();
    if (m > 24) throw Error(ErrorKind::MalformedInput, "too many rays");
    faces_.assign(size_t(1) << m, false);
    for (const auto& c : fan_->cones()) {
      unsigned full = 0;
      for (int i : c) full |= 1u << i;
      for (unsigned s = full;; s = (s - 1) & full) {
        faces_[s] = true;
        if (s == 0) break;
      }
    }
  }

  // u-expansion of prod_{c<=0}(u + cz) / prod_{c<=n}(u + cz): entry j is the
  // coefficient of u^j, which comes with z^{-n-j}.
  const std::vector<Rational>& factor(int n) const {
    auto it = factor_cache_.find(n);
    if (it != factor_cache_.end()) return it->second;
    std::vector<Rational> v;
    if (n <= 0) {
      v.assign(1, Rational(1));
      for (int c = n + 1; c <= 0; ++c) {
        std::vector<Rational> w(v.size() + 1);
        for (size_t j = 0; j < v.size(); ++j) {
          w[j + 1] += v[j];
          w[j] += v[j] * c;
        }
        v = w;
      }
    } else {
      // (-1)^j / n! * h_j(1, 1/2, ..., 1/n)
      std::vector<Rational> h(kint_ + 1);
      h[0] = 1;
      for (int t = 1; t <= n; ++t) {
        Rational x(1, t);
        for (int j = 1; j <= kint_; ++j) h[j] += x * h[j - 1];
      }
      const Rational inv = 1 / factorial(n);
      v.resize(kint_ + 1);
      for (int j = 0; j <= kint_; ++j) v[j] = (j % 2 ? Rational(-h[j]) : h[j]) * inv;
    }
    return factor_cache_.emplace(n, std::move(v)).first->second;
  }

  int room(int c) const { return kint_ - mod_.basis_norm(c); }

  static ClassVec empty_like(const ClassVec& v) { return ClassVec(v.size()); }
  static Poly empty_like(const Poly&) { return Poly(); }
  static ClassVec multiply_by(const ClassVec& v, const Rational& q) {
    ClassVec r(v);
    for (auto& p : r) p *= q;
    return r;
  }
  static Poly multiply_by(const Poly& p, const Rational& q) { return p * q; }

  bool is_identity(const std::vector<ClassVec>& A) const {
    for (int j = 0; j < rank(); ++j)
      if (A[j] != mod_.basis_vector(j)) return false;
    return true;
  }

  // Product of small matrices (columns) with polynomial entries.
  std::vector<ClassVec> times_small(const std::vector<ClassVec>& A, const std::vector<ClassVec>& B) const {
    const int r = rank();
    std::vector<ClassVec> out(r, mod_.zero());
    for (int j = 0; j < r; ++j)
      for (int l = 0; l < r; ++l)
        if (!B[j][l].is_zero()) out[j] += A[l] * B[j][l];
    for (auto& v : out) truncate(v);
    return out;
  }
  std::vector<ClassVec> M_column_slice(const MMatrix& M, int id) const {
    std::vector<ClassVec> out(rank());
    for (int j = 0; j < rank(); ++j) out[j] = M[j][id];
    return out;
  }

  std::vector<ClassVec> unipotent_inverse(const std::vector<ClassVec>& P0) const {
    const int r = rank();
    std::vector<ClassVec> N(r), id(r);
    for (int j = 0; j < r; ++j) {
      id[j] = mod_.basis_vector(j);
      N[j] = P0[j];
      N[j] -= id[j];
    }
    // (Id + N)^{-1} = sum (-N)^j; N nilpotent.
    std::vector<ClassVec> inv = id, power = id;
    for (int t = 1; t <= r; ++t) {
      power = times_small(power, N);
      for (auto& v : power)
        for (auto& p : v) p = -p;
      bool zero = true;
      for (const auto& v : power) zero = zero && is_zero(v);
      if (zero) break;
      for (int j = 0; j < r; ++j) inv[j] += power[j];
    }
    auto check = times_small(P0, inv);
    if (!is_identity(check))
      throw Error(ErrorKind::FactorizationResidue, "order-zero part of dI is not unipotent");
    return inv;
  }

  void factorize() {
    const int r = rank();
    D_.clear();
    for (int b = 0; b < r; ++b) D_.push_back(dI_column(mod_.basis_points()[b]));
    std::tie(M_, P_) = birkhoff(D_);
  }

  void build_ray_operators() {
    const int r = rank();
    A_.assign(fan_->num_rays(), MMatrix(r, zero_series()));
    for (int i = 0; i < fan_->num_rays(); ++i)
      for (int l = 0; l < r; ++l) {
        A_[i][l][0] = mod_.mul_u(i, mod_.basis_vector(l));
        for (int id = 1; id < mt_.size(); ++id) {
          const int w = divisor_weight(i, id);
          if (w == 0) continue;
          ClassVec v(r);
          for (int c = 0; c < r; ++c) v[c] = M_[l][id][c].z_coefficient(-1) * Rational(w);
          truncate(v);
          A_[i][l][id] = v;
        }
      }
  }

  // All nonzero delta^alpha / alpha! over multisets alpha of points.
  std::map<std::vector<IntVec>, MScalar> delta_powers(const std::map<IntVec, MScalar>& delta) const {
    std::map<std::vector<IntVec>, MScalar> plain, out;
    std::vector<IntVec> keys;
    for (const auto& [k, s] : delta)
      if (!is_zero(s)) keys.push_back(k);
    std::vector<std::vector<IntVec>> frontier;
    for (const auto& k : keys) {
      plain[{k}] = delta.at(k);
      frontier.push_back({k});
    }
    while (!frontier.empty()) {
      std::vector<std::vector<IntVec>> next;
      for (const auto& alpha : frontier)
        for (const auto& k : keys) {
          if (k < alpha.back()) continue;
          MScalar prod = multiply(plain.at(alpha), delta.at(k));
          if (is_zero(prod)) continue;
          auto beta = alpha;
          beta.push_back(k);
          plain[beta] = std::move(prod);
          next.push_back(beta);
        }
      frontier = std::move(next);
    }
    for (auto& [alpha, s] : plain) {
      Rational fact = 1;
      for (size_t i = 0, j; i < alpha.size(); i = j) {
        j = i;
        while (j < alpha.size() && alpha[j] == alpha[i]) ++j;
        fact *= factorial(static_cast<int>(j - i));
      }
      MScalar t = s;
      for (auto& p : t) p *= 1 / fact;
      out.emplace(alpha, std::move(t));
    }
    return out;
  }

  const Fan* fan_;
  TruncationPolicy policy_;
  std::vector<Var> vars_;
  EquivariantModule mod_;
  MonoTable mt_;
  int gint_ = 0, kint_ = 0;
  HSeries::Space space_;
  std::vector<bool> faces_;
  MMatrix D_, M_, P_;
  std::vector<MMatrix> A_;
  mutable std::map<int, std::vector<Rational>> factor_cache_;
  mutable std::optional<MSeries> I_;
  mutable std::map<IntVec, MSeries> dcache_, pcache_, scache_;
};

}  // namespace toricmirror
