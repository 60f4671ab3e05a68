#pragma once

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

namespace toricmirror {

struct TruncationPolicy {
  int kcoh = 2;
  int kvar = 1;
  int qcap = 2;
  int gcap = 2;
  int zneg = 10;
  int zpos = -1;  // -1: derived from the other caps

  int effective_zpos() const { return zpos >= 0 ? zpos : kcoh + gcap * std::max(1, kvar); }

  void validate() const {
    if (kcoh < 0 || kvar < 0 || qcap < 0 || gcap < 0 || zneg < 0)
      throw Error(ErrorKind::IncompatibleTruncation, "caps must be non-negative");
    if (kvar > kcoh) throw Error(ErrorKind::IncompatibleTruncation, "Kvar must not exceed Kcoh");
    if (zpos >= 0 && zpos < kcoh) throw Error(ErrorKind::IncompatibleTruncation, "Zpos must be at least Kcoh");
  }
  bool operator==(const TruncationPolicy&) const = default;
};

// Terms discarded because they fell outside a cap.
struct Loss {
  long kcoh = 0, qcap = 0, gcap = 0, zwindow = 0;
  long total() const { return kcoh + qcap + gcap + zwindow; }
  Loss& operator+=(const Loss& o) {
    kcoh += o.kcoh;
    qcap += o.qcap;
    gcap += o.gcap;
    zwindow += o.zwindow;
    return *this;
  }
};

// A formal variable: y_k (n = 0) or a primitive-form deformation y_{k,n}.
struct Var {
  IntVec point;
  int n = 0;
  int norm = 0;
  std::string name() const {
    std::string s = "y" + to_string(point);
    if (n > 0) s += "_" + std::to_string(n);
    return s;
  }
};

class SeriesSpace {
 public:
  SeriesSpace(const Fan& fan, TruncationPolicy policy, std::vector<Var> vars)
      : fan_(&fan), coh_(fan), policy_(policy), vars_(std::move(vars)) {
    policy_.validate();
  }

  const Fan& fan() const { return *fan_; }
  const Cohomology& cohomology() const { return coh_; }
  const TruncationPolicy& policy() const { return policy_; }
  const std::vector<Var>& vars() const { return vars_; }
  int num_vars() const { return static_cast<int>(vars_.size()); }

  std::optional<int> var_index(const IntVec& point, int n = 0) const {
    for (size_t j = 0; j < vars_.size(); ++j)
      if (vars_[j].point == point && vars_[j].n == n) return static_cast<int>(j);
    return std::nullopt;
  }

  // Half the grading degree of a monomial Q^d y^g on the slice:
  // deg y_k = 1 - |k| - n, deg Q^d = c1.d.
  int monomial_weight(const IntVec& d, const IntVec& g) const {
    int w = fan_->c1_degree(d);
    for (size_t j = 0; j < g.size(); ++j) w += g[j] * (1 - vars_[j].norm - vars_[j].n);
    return w;
  }

  int order(const IntVec& d, const IntVec& g) const { return fan_->theta_degree(d) + sum(g); }

 private:
  const Fan* fan_;
  Cohomology coh_;
  TruncationPolicy policy_;
  std::vector<Var> vars_;
};

// The tracked deformation variables: y_k for non-ray points with |k| <= Kvar.
inline std::vector<Var> tracked_variables(const Fan& fan, int kvar) {
  std::vector<Var> out;
  std::set<IntVec> rays(fan.rays().begin(), fan.rays().end());
  for (const auto& p : enumerate_points(fan, kvar))
    if (!rays.count(p.k)) out.push_back({p.k, 0, p.norm});
  return out;
}

struct SeriesKey {
  BasisKey k;
  int z = 0;
  IntVec d;
  IntVec g;
  bool operator<(const SeriesKey& o) const {
    if (!(k == o.k)) return k < o.k;
    if (z != o.z) return z < o.z;
    if (d != o.d) return d < o.d;
    return g < o.g;
  }
  bool operator==(const SeriesKey& o) const { return k == o.k && z == o.z && d == o.d && g == o.g; }
};

class HSeries {
 public:
  using Space = std::shared_ptr<const SeriesSpace>;

  HSeries() = default;
  explicit HSeries(Space sp) : sp_(std::move(sp)) {}

  static HSeries constant(Space sp, const Rational& c) {
    HSeries s(sp);
    s.add_term(s.unit_key(), c);
    return s;
  }
  static HSeries variable(Space sp, int j) {
    HSeries s(sp);
    SeriesKey key = s.unit_key();
    key.g[j] = 1;
    s.add_term(key, 1);
    return s;
  }

  const Space& space() const { return sp_; }
  const std::map<SeriesKey, Rational>& terms() const { return terms_; }
  const Loss& loss() const { return loss_; }
  Loss& loss() { return loss_; }
  bool is_zero() const { return terms_.empty(); }
  size_t size() const { return terms_.size(); }

  SeriesKey unit_key() const {
    return {BasisKey{0, IntVec(sp_->fan().rank(), 0)}, 0, IntVec(sp_->fan().num_rays(), 0),
            IntVec(sp_->num_vars(), 0)};
  }

  // Inserts a term, applying the caps. Returns false if it was discarded.
  bool add_term(const SeriesKey& key, const Rational& c) {
    if (c == 0) return true;
    const auto& p = sp_->policy();
    if (key.k.norm > p.kcoh) return ++loss_.kcoh, false;
    if (sp_->fan().theta_degree(key.d) > p.qcap) return ++loss_.qcap, false;
    if (sum(key.g) > p.gcap) return ++loss_.gcap, false;
    if (key.z < -p.zneg || key.z > p.effective_zpos()) return ++loss_.zwindow, false;
    auto [it, fresh] = terms_.emplace(key, c);
    if (!fresh) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
    return true;
  }

  Rational coefficient(const SeriesKey& key) const {
    auto it = terms_.find(key);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  HSeries& operator+=(const HSeries& o) {
    for (const auto& [k, c] : o.terms_) add_term(k, c);
    loss_ += o.loss_;
    return *this;
  }
  HSeries& operator-=(const HSeries& o) {
    for (const auto& [k, c] : o.terms_) add_term(k, -c);
    loss_ += o.loss_;
    return *this;
  }
  HSeries operator+(const HSeries& o) const { return HSeries(*this) += o; }
  HSeries operator-(const HSeries& o) const { return HSeries(*this) -= o; }
  HSeries operator*(const Rational& c) const {
    HSeries r(sp_);
    r.loss_ = loss_;
    if (c != 0)
      for (const auto& [k, v] : terms_) r.terms_.emplace(k, v * c);
    return r;
  }

  HSeries operator*(const HSeries& o) const {
    check_space(o);
    HSeries r(sp_);
    r.loss_ = loss_;
    r.loss_ += o.loss_;
    const auto& coh = sp_->cohomology();
    for (const auto& [ka, ca] : terms_)
      for (const auto& [kb, cb] : o.terms_) {
        auto prod = coh.phi_product(ka.k.k, kb.k.k);
        if (!prod) continue;
        SeriesKey key{BasisKey{ka.k.norm + kb.k.norm, *prod}, ka.z + kb.z, add(ka.d, kb.d), add(ka.g, kb.g)};
        r.add_term(key, ca * cb);
      }
    return r;
  }
  HSeries& operator*=(const HSeries& o) { return *this = *this * o; }

  template <class Pred>
  HSeries filter(Pred keep) const {
    HSeries r(sp_);
    r.loss_ = loss_;
    for (const auto& [k, c] : terms_)
      if (keep(k)) r.terms_.emplace(k, c);
    return r;
  }

  HSeries z_negative() const { return filter([](const SeriesKey& k) { return k.z < 0; }); }
  HSeries z_polynomial() const { return filter([](const SeriesKey& k) { return k.z >= 0; }); }
  HSeries order_part(int n) const {
    return filter([&](const SeriesKey& k) { return sp_->order(k.d, k.g) == n; });
  }
  HSeries up_to_order(int n) const {
    return filter([&](const SeriesKey& k) { return sp_->order(k.d, k.g) <= n; });
  }
  int max_order() const {
    int n = -1;
    for (const auto& [k, c] : terms_) n = std::max(n, sp_->order(k.d, k.g));
    return n;
  }

  // Coefficient of z^e as a z-free series.
  HSeries z_coefficient(int e) const {
    HSeries r(sp_);
    r.loss_ = loss_;
    for (const auto& [k, c] : terms_)
      if (k.z == e) {
        SeriesKey kk = k;
        kk.z = 0;
        r.terms_.emplace(kk, c);
      }
    return r;
  }

  HSeries shift_z(int by) const {
    HSeries r(sp_);
    r.loss_ = loss_;
    for (const auto& [k, c] : terms_) {
      SeriesKey kk = k;
      kk.z += by;
      r.add_term(kk, c);
    }
    return r;
  }

  HSeries derive_var(int j) const {
    HSeries r(sp_);
    r.loss_ = loss_;
    for (const auto& [k, c] : terms_) {
      if (k.g[j] == 0) continue;
      SeriesKey kk = k;
      --kk.g[j];
      r.terms_.emplace(kk, c * k.g[j]);
    }
    return r;
  }

  // Q_i d/dQ_i: multiplies each term by d_i.
  HSeries derive_novikov(int i) const {
    HSeries r(sp_);
    r.loss_ = loss_;
    for (const auto& [k, c] : terms_)
      if (k.d[i] != 0) r.terms_.emplace(k, c * k.d[i]);
    return r;
  }

  // Grading weights present (half degrees); a homogeneous series has one.
  std::set<int> weights() const {
    std::set<int> w;
    for (const auto& [k, c] : terms_) w.insert(k.k.norm + k.z + sp_->monomial_weight(k.d, k.g));
    return w;
  }

  bool operator==(const HSeries& o) const { return terms_ == o.terms_; }
  bool operator!=(const HSeries& o) const { return !(*this == o); }

  // Restriction to the fixed point of cone c, as a map from monomial (d, g)
  // to a polynomial in lambda and z.
  std::map<std::pair<IntVec, IntVec>, Poly> restrict_fixed_point(int c) const {
    std::map<std::pair<IntVec, IntVec>, Poly> out;
    const auto& coh = sp_->cohomology();
    for (const auto& [k, v] : terms_) {
      Poly p = coh.restrict_point(k.k.k, c).shifted_z(k.z) * v;
      auto& slot = out[{k.d, k.g}];
      slot += p;
    }
    for (auto it = out.begin(); it != out.end();)
      it = it->second.is_zero() ? out.erase(it) : std::next(it);
    return out;
  }

 private:
  void check_space(const HSeries& o) const {
    if (sp_ != o.sp_ && !(sp_->policy() == o.sp_->policy() && sp_->num_vars() == o.sp_->num_vars()))
      throw Error(ErrorKind::IncompatibleTruncation, "series from different spaces");
  }

  Space sp_;
  std::map<SeriesKey, Rational> terms_;
  Loss loss_;
};

// Column-indexed family of series, e.g. an operator acting on phi_k.
struct OperatorSeries {
  std::vector<IntVec> columns;
  std::vector<HSeries> entries;

  const HSeries& column(const IntVec& k) const {
    for (size_t t = 0; t < columns.size(); ++t)
      if (columns[t] == k) return entries[t];
    throw Error(ErrorKind::MalformedInput, "no column " + to_string(k));
  }
  Loss loss() const {
    Loss l;
    for (const auto& e : entries) l += e.loss();
    return l;
  }
};

// A substitution y_j -> s_j for a subset of the variables; scalar series.
using ScalarFamily = std::map<int, HSeries>;

namespace detail {

inline HSeries power_cached(std::map<std::pair<int, int>, HSeries>& cache, const HSeries& base, int j, int e) {
  auto it = cache.find({j, e});
  if (it != cache.end()) return it->second;
  HSeries r = e == 0 ? HSeries::constant(base.space(), 1) : power_cached(cache, base, j, e - 1) * base;
  cache.emplace(std::make_pair(j, e), r);
  return r;
}

}  // namespace detail

// a(y) with y_j replaced by family[j]; other variables are left alone.
inline HSeries compose(const HSeries& a, const ScalarFamily& family) {
  const auto& sp = a.space();
  HSeries out(sp);
  out.loss() = a.loss();
  std::map<std::pair<int, int>, HSeries> cache;
  // Group terms by the exponents of substituted variables.
  std::map<IntVec, HSeries> grouped;
  for (const auto& [k, c] : a.terms()) {
    IntVec sub_exp(sp->num_vars(), 0);
    SeriesKey rest = k;
    for (const auto& [j, s] : family) {
      sub_exp[j] = k.g[j];
      rest.g[j] = 0;
    }
    auto [it, fresh] = grouped.try_emplace(sub_exp, sp);
    it->second.add_term(rest, c);
  }
  for (const auto& [e, part] : grouped) {
    HSeries factor = HSeries::constant(sp, 1);
    for (const auto& [j, s] : family)
      if (e[j] > 0) factor = factor * detail::power_cached(cache, s, j, e[j]);
    out += part * factor;
  }
  return out;
}

// Compositional inverse of y_j -> f_j(y) (j over the family's keys), to the
// policy order. Order zero of the Jacobian must be invertible.
inline ScalarFamily invert(const ScalarFamily& f) {
  if (f.empty()) return {};
  const auto sp = f.begin()->second.space();
  std::vector<int> idx;
  for (const auto& [j, s] : f) idx.push_back(j);
  const size_t n = idx.size();
  // Linear part at the base point: coefficient of y_i in f_j with d = 0.
  RatMatrix L(n, std::vector<Rational>(n));
  HSeries probe(sp);
  for (size_t a = 0; a < n; ++a)
    for (size_t b = 0; b < n; ++b) {
      SeriesKey key = probe.unit_key();
      key.g[idx[b]] = 1;
      L[a][b] = f.at(idx[a]).coefficient(key);
    }
  auto Linv = inverse(L);
  if (!Linv) throw Error(ErrorKind::SingularJacobian, "the linear part of the map is singular");
  // Nonlinear part N_j = f_j - sum_b L_jb y_b.
  ScalarFamily N;
  for (size_t a = 0; a < n; ++a) {
    HSeries nl = f.at(idx[a]);
    for (size_t b = 0; b < n; ++b)
      if (L[a][b] != 0) nl -= HSeries::variable(sp, idx[b]) * L[a][b];
    N.emplace(idx[a], nl);
  }
  // Fixed point y = L^{-1}(t - N(y)); each pass gains one order.
  ScalarFamily y;
  for (size_t a = 0; a < n; ++a) {
    HSeries s(sp);
    for (size_t b = 0; b < n; ++b) s += HSeries::variable(sp, idx[b]) * (*Linv)[a][b];
    y.emplace(idx[a], s);
  }
  const int passes = sp->policy().qcap + sp->policy().gcap + 1;
  for (int it = 0; it < passes; ++it) {
    std::vector<HSeries> rhs;
    for (size_t a = 0; a < n; ++a) rhs.push_back(HSeries::variable(sp, idx[a]) - compose(N.at(idx[a]), y));
    ScalarFamily next;
    for (size_t a = 0; a < n; ++a) {
      HSeries s(sp);
      for (size_t b = 0; b < n; ++b)
        if ((*Linv)[a][b] != 0) s += rhs[b] * (*Linv)[a][b];
      next.emplace(idx[a], s);
    }
    y = std::move(next);
  }
  return y;
}

}  // namespace toricmirror
