#pragma once

#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <algorithm>
#include <string>
#include <vector>

#include "toricmirror/gauss_manin.hpp"
#include "toricmirror/mirror.hpp"
#include "toricmirror/report.hpp"

namespace toricmirror {

// ---- rational functions in product form ----------------------------------

// c * prod_f f^{e_f} where each f is a primitive linear form in
// (lambda_1..lambda_D, z) whose first nonzero coefficient is positive. The
// representation is canonical, so equality is structural.
class RatFunc {
 public:
  RatFunc() = default;  // zero
  static RatFunc constant(const Rational& c) {
    RatFunc r;
    r.c_ = c;
    return r;
  }

  bool is_zero() const { return c_ == 0; }
  const Rational& coefficient() const { return c_; }
  const std::map<IntVec, int>& factors() const { return f_; }

  // Multiplies by form^e; a zero form makes the result zero (e > 0) or is
  // rejected (e < 0).
  RatFunc& mul_form(IntVec form, int e) {
    if (c_ == 0 || e == 0) return *this;
    int g = 0;
    for (int x : form) g = std::gcd(g, std::abs(x));
    if (g == 0) {
      if (e < 0) throw Error(ErrorKind::IdentityViolation, "division by a zero linear form");
      c_ = 0;
      f_.clear();
      return *this;
    }
    int lead = 0;
    for (int x : form)
      if (x != 0) {
        lead = x;
        break;
      }
    const int scale = lead < 0 ? -g : g;
    for (int& x : form) x /= scale;
    Rational s = scale;
    for (int t = 0; t < std::abs(e); ++t) c_ = e > 0 ? Rational(c_ * s) : Rational(c_ / s);
    int& slot = f_[form];
    slot += e;
    if (slot == 0) f_.erase(form);
    return *this;
  }
  RatFunc& operator*=(const RatFunc& o) {
    if (c_ == 0) return *this;
    if (o.c_ == 0) return *this = RatFunc();
    c_ *= o.c_;
    for (const auto& [f, e] : o.f_) {
      int& slot = f_[f];
      slot += e;
      if (slot == 0) f_.erase(f);
    }
    return *this;
  }
  RatFunc& operator*=(const Rational& c) {
    c_ *= c;
    if (c_ == 0) f_.clear();
    return *this;
  }
  bool operator==(const RatFunc& o) const { return c_ == o.c_ && f_ == o.f_; }
  bool operator!=(const RatFunc& o) const { return !(*this == o); }

  static Poly form_poly(const IntVec& f) {
    const int D = static_cast<int>(f.size()) - 1;
    Poly p = Poly::linear(IntVec(f.begin(), f.begin() + D));
    if (f[D] != 0) p += Poly::term(f[D], Poly::mono(1));
    return p;
  }
  // (numerator, denominator) as polynomials.
  std::pair<Poly, Poly> expand() const {
    Poly num(c_), den(1);
    for (const auto& [f, e] : f_) {
      Poly p = form_poly(f);
      for (int t = 0; t < std::abs(e); ++t) (e > 0 ? num : den) *= p;
    }
    return {num, den};
  }

  std::string to_string() const {
    if (c_ == 0) return "0";
    std::string s = c_.get_str();
    for (const auto& [f, e] : f_) s += " * " + toricmirror::to_string(f) + "^" + std::to_string(e);
    return s;
  }

 private:
  Rational c_ = 0;
  std::map<IntVec, int> f_;
};

// ---- fixed-point localization of the I-function --------------------------

// Restrictions of the I-function to torus fixed points, computed directly
// from the hypergeometric formula with rational-function coefficients.
class LocalizationOracle {
 public:
  LocalizationOracle(const Fan& f, std::vector<IntVec> vars) : f_(&f), vars_(std::move(vars)) {
    for (int c = 0; c < f.num_cones(); ++c) weights_.push_back(fixed_point_weights(f, c));
    for (const auto& k : vars_) var_psi_.push_back(f.psi(k));
  }

  // u_i restricted to fixed point x, shifted by lambda -> lambda - k z.
  IntVec form(int x, int i, const IntVec& k) const {
    const IntVec& w = weights_[x][i];
    IntVec out(w.begin(), w.end());
    out.push_back(k.empty() ? 0 : -dot(w, k));
    return out;
  }

  // prod_{c<=0}(u + cz) / prod_{c<=n}(u + cz), u a form in (lambda, z).
  static RatFunc hyper(const IntVec& u, int n) {
    RatFunc r = RatFunc::constant(1);
    const int D = static_cast<int>(u.size()) - 1;
    auto shifted = [&](int c) {
      IntVec g = u;
      g[D] += c;
      return g;
    };
    if (n <= 0)
      for (int c = n + 1; c <= 0; ++c) r.mul_form(shifted(c), 1);
    else
      for (int c = 1; c <= n; ++c) r.mul_form(shifted(c), -1);
    return r;
  }

  // Exponent of y_{b_i} for the coefficient of Q^d y^l.
  IntVec ray_exponents(const IntVec& d, const IntVec& l) const {
    IntVec n = d;
    for (size_t j = 0; j < vars_.size(); ++j)
      for (size_t i = 0; i < n.size(); ++i) n[i] -= l[j] * var_psi_[j][i];
    return n;
  }

  // Coefficient of Q^d y^l in I restricted to x, optionally shifted.
  RatFunc term(int x, const IntVec& d, const IntVec& l, const IntVec& shift = {}) const {
    const int D = f_->rank();
    IntVec zform(D + 1, 0);
    zform[D] = 1;
    RatFunc r = RatFunc::constant(1);
    int gl = 0;
    for (int e : l) {
      r *= Rational(1) / factorial(e);
      gl += e;
    }
    r.mul_form(zform, 1 - gl);
    IntVec n = ray_exponents(d, l);
    for (int i = 0; i < f_->num_rays(); ++i) {
      r *= hyper(form(x, i, shift), n[i]);
      if (r.is_zero()) break;
    }
    return r;
  }

  // Cone coordinates of k at x (zero off the cone).
  IntVec local_coordinates(int x, const IntVec& k) const {
    IntVec s(f_->num_rays(), 0);
    for (int i = 0; i < f_->num_rays(); ++i) s[i] = dot(weights_[x][i], k);
    return s;
  }

  // Delta_x(k) without its Novikov factor: prod_i F(u_i(x), -s_i).
  RatFunc delta(int x, const IntVec& k) const {
    IntVec s = local_coordinates(x, k);
    RatFunc r = RatFunc::constant(1);
    for (int i = 0; i < f_->num_rays(); ++i) r *= hyper(form(x, i, {}), -s[i]);
    return r;
  }
  // Novikov exponent of Delta_x(k): Psi(k) - s_x(k).
  IntVec delta_degree(int x, const IntVec& k) const { return sub(f_->psi(k), local_coordinates(x, k)); }

  // z d/dy_k I_x at Q^d y^l; rays differentiate in the divisor variables.
  RatFunc lhs(int x, const IntVec& k, const IntVec& d, const IntVec& l) const {
    for (int i = 0; i < f_->num_rays(); ++i)
      if (f_->ray(i) == k) {
        RatFunc r = term(x, d, l);
        IntVec g = form(x, i, {});
        g.back() += ray_exponents(d, l)[i];
        return r.mul_form(g, 1);
      }
    for (size_t j = 0; j < vars_.size(); ++j)
      if (vars_[j] == k) {
        IntVec l1 = l;
        ++l1[j];
        RatFunc r = term(x, d, l1);
        r *= Rational(l1[j]);
        const int D = f_->rank();
        IntVec zform(D + 1, 0);
        zform[D] = 1;
        return r.mul_form(zform, 1);
      }
    throw Error(ErrorKind::MalformedInput, "point " + to_string(k) + " is not a variable");
  }

  // Delta_x(k) e^{-k z d/dlambda} I_x at Q^d y^l.
  RatFunc rhs(int x, const IntVec& k, const IntVec& d, const IntVec& l) const {
    RatFunc r = delta(x, k);
    r *= term(x, sub(d, delta_degree(x, k)), l, k);
    return r;
  }

 private:
  const Fan* f_;
  std::vector<IntVec> vars_;
  std::vector<std::vector<IntVec>> weights_;
  std::vector<IntVec> var_psi_;
};

// Localization identity for every variable direction |k| <= kmax (rays and
// tracked points), every fixed point and every (d, l) in the caps, plus the
// agreement of the engine's I with the oracle at every fixed point.
// perturb_delta: doubles Delta at the first fixed point (negative control).
inline Report localization_check(const MirrorEngine& e, const std::string& fan_name, int kmax = 2,
                                 bool perturb_delta = false) {
  ReportBuilder rb(fan_name);
  const Fan& f = e.fan();
  std::vector<IntVec> vars;
  for (const auto& v : e.vars()) vars.push_back(v.point);
  LocalizationOracle orc(f, vars);
  const auto& mt = e.monos();
  std::vector<IntVec> dirs;
  for (const auto& b : f.rays()) dirs.push_back(b);
  for (const auto& v : e.vars())
    if (v.norm <= kmax) dirs.push_back(v.point);

  for (int id = 0; id < mt.size(); ++id) {
    if (mt.gdeg(id) > e.policy().gcap) continue;
    for (int x = 0; x < f.num_cones(); ++x) {
      for (const auto& k : dirs) {
        RatFunc a = orc.lhs(x, k, mt.d(id), mt.l(id));
        RatFunc b = orc.rhs(x, k, mt.d(id), mt.l(id));
        if (perturb_delta && x == 0) b *= Rational(2);
        rb.record("localization_identity", mt.order(id), a == b,
                  "k=" + to_string(k) + " x=" + detail::cone_name(f.cone(x)) + " " + describe_mono(e, id) + ": " +
                      a.to_string() + " vs " + b.to_string());
      }
      // Engine tie: I restricted at x times the denominator equals the
      // numerator up to the internal lambda-degree.
      auto [num, den] = orc.term(x, mt.d(id), mt.l(id)).expand();
      Poly lhs = (e.module().restrict(e.I()[id], x) * den).truncate_lambda_degree(e.internal_degree());
      Poly rhs = num.truncate_lambda_degree(e.internal_degree());
      rb.record("localization_engine_tie", mt.order(id), lhs == rhs,
                "x=" + detail::cone_name(f.cone(x)) + " " + describe_mono(e, id));
    }
  }
  return rb.build();
}

// ---- property suite -------------------------------------------------------

inline MSeries unit_series(const MirrorEngine& e) { return e.constant_series(e.module().unit()); }

inline Report check_residual(const MirrorEngine& e, const std::string& fan) {
  ReportBuilder rb(fan);
  MMatrix R = e.residual(e.D(), e.M(), e.P());
  for (int j = 0; j < e.rank(); ++j)
    rb.compare(e, "birkhoff_residual", R[j], e.zero_series(), e.guard_order(),
               "column e" + to_string(e.module().basis_points()[j]));
  for (int j = 0; j < e.rank(); ++j)
    for (int id = 0; id < e.size(); ++id) {
      bool mneg = true, ppos = true;
      for (int c = 0; c < e.rank(); ++c) {
        Poly m = e.M()[j][id][c];
        if (id == 0 && c == j) m -= Poly(1);
        mneg = mneg && m.z_polynomial().is_zero();
        ppos = ppos && e.P()[j][id][c].z_negative().is_zero();
      }
      rb.record("birkhoff_shape", e.monos().order(id), mneg && ppos, describe_mono(e, id));
    }
  return rb.build();
}

// Throws FactorizationResidue at the first mono where M P differs from D.
inline void require_factorization(const MirrorEngine& e, const MMatrix& D, const MMatrix& M, const MMatrix& P) {
  MMatrix R = e.residual(D, M, P);
  for (int j = 0; j < e.rank(); ++j)
    for (int id = 0; id < e.size(); ++id) {
      if (e.monos().gdeg(id) > e.guard_order()) continue;
      ClassVec r = R[j][id];
      e.truncate(r);
      if (!is_zero(r))
        throw Error(ErrorKind::FactorizationResidue, "column e" + to_string(e.module().basis_points()[j]) + " at " +
                                                         describe_mono(e, id));
    }
}

inline Report check_uniqueness(const MirrorEngine& e, const std::string& fan) {
  ReportBuilder rb(fan);
  MMatrix R = e.residual(e.D(), e.M(), e.P());
  MMatrix MP = e.D();
  for (int j = 0; j < e.rank(); ++j)
    for (int id = 0; id < e.size(); ++id) MP[j][id] += R[j][id];
  auto [M2, P2] = e.birkhoff(MP);
  for (int j = 0; j < e.rank(); ++j) {
    rb.compare(e, "birkhoff_uniqueness", M2[j], e.M()[j], e.guard_order());
    rb.compare(e, "birkhoff_uniqueness", P2[j], e.P()[j], e.guard_order());
  }
  return rb.build();
}

inline Report check_base_point(const MirrorEngine& e, const std::string& fan) {
  ReportBuilder rb(fan);
  rb.record("base_point", 0, is_zero(e.tau()[0]), "tau at the base point");
  rb.record("base_point", 0, e.upsilon()[0] == e.module().unit(), "Upsilon at the base point");
  for (const auto& k : e.points_up_to(e.policy().kcoh)) {
    ClassVec d = e.seidel(k)[0];
    d -= e.module().phi(k);
    e.truncate(d);
    rb.record("seidel_classical_limit", 0, is_zero(d), "S" + to_string(k));
  }
  return rb.build();
}

// d tau / dy_j = S_{k_j} and d Upsilon / dy_j = z^{-1} P(phi_{k_j}) - z^{-1} S_{k_j} * Upsilon.
inline Report check_flow(const MirrorEngine& e, const std::string& fan) {
  ReportBuilder rb(fan);
  const MSeries tau = e.tau();
  const MSeries ups = e.upsilon();
  const int g = e.guard_order() - 1;
  for (size_t j = 0; j < e.vars().size(); ++j) {
    const IntVec& k = e.vars()[j].point;
    rb.compare(e, "flow_tau", e.derive(tau, static_cast<int>(j)), e.seidel(k), g, e.vars()[j].name());
    MSeries rhs = e.P_column(k);
    MSeries sy = e.qproduct(e.seidel(k), ups);
    for (int id = 0; id < e.size(); ++id) {
      rhs[id] -= sy[id];
      for (auto& p : rhs[id]) p = p.shifted_z(-1);
    }
    rb.compare(e, "flow_upsilon", e.derive(ups, static_cast<int>(j)), rhs, g, e.vars()[j].name());
  }
  return rb.build();
}

// sum_i (chi.b_i) S_{b_i} + sum_j (chi.k_j) y_j S_{k_j} = lambda_chi.
inline Report check_linear_relation(const MirrorEngine& e, const std::string& fan) {
  ReportBuilder rb(fan);
  const int D = e.fan().rank();
  for (int a = 0; a < D; ++a) {
    MSeries lhs = e.zero_series();
    for (const auto& b : e.fan().rays())
      if (b[a] != 0) {
        const MSeries& s = e.seidel(b);
        for (int id = 0; id < e.size(); ++id) lhs[id] += s[id] * Poly(b[a]);
      }
    for (size_t j = 0; j < e.vars().size(); ++j) {
      const IntVec& k = e.vars()[j].point;
      if (k[a] == 0) continue;
      MSeries s = e.times_var(e.seidel(k), static_cast<int>(j));
      for (int id = 0; id < e.size(); ++id) lhs[id] += s[id] * Poly(k[a]);
    }
    MSeries rhs = lambda_times(e, a, unit_series(e));
    rb.compare(e, "linear_relation", lhs, rhs, e.guard_order(), "chi=e" + std::to_string(a + 1));
  }
  return rb.build();
}

inline void check_weights(ReportBuilder& rb, const HSeries& s, int expected, const std::string& what) {
  for (int w : s.weights())
    rb.record("homogeneity", 0, w == expected,
              what + " has weight " + std::to_string(w) + ", expected " + std::to_string(expected));
  if (s.weights().empty()) rb.record("homogeneity", 0, true);
}

inline Report check_homogeneity(const MirrorEngine& e, const std::string& fan) {
  ReportBuilder rb(fan);
  check_weights(rb, e.to_series(e.tau()), 1, "tau");
  check_weights(rb, e.to_series(e.upsilon()), 0, "Upsilon");
  check_weights(rb, e.to_series(e.I()), 1, "I");
  for (const auto& k : e.points_up_to(e.policy().kcoh)) {
    const int n = point_data(e.fan(), k).norm;
    check_weights(rb, e.to_series(e.seidel(k)), n, "S" + to_string(k));
    check_weights(rb, e.to_series(e.P_column(k)), n, "P" + to_string(k));
  }
  return rb.build();
}

using ProductFn = std::function<MSeries(const MSeries&, const MSeries&)>;

// product: defaults to the engine's quantum product.
inline Report check_quantum_product(const MirrorEngine& e, const std::string& fan, ProductFn product = {}) {
  ReportBuilder rb(fan);
  if (!product) product = [&e](const MSeries& x, const MSeries& y) { return e.qproduct(x, y); };
  const int kcoh = e.policy().kcoh;
  const int g = e.guard_order();
  const IntVec l0(e.vars().size(), 0);
  auto phi = [&](const IntVec& k) { return e.constant_series(e.module().phi(k)); };
  auto norm = [&](const IntVec& k) { return point_data(e.fan(), k).norm; };
  const auto pts = e.points_up_to(kcoh);
  const MSeries one = unit_series(e);
  for (const auto& k : pts) {
    rb.compare(e, "unit", product(one, phi(k)), phi(k), g, to_string(k));
    rb.compare(e, "unit", product(phi(k), one), phi(k), g, to_string(k));
  }
  for (const auto& k : pts)
    for (const auto& l : e.points_up_to(kcoh - norm(k))) {
      const std::string ctx = to_string(k) + " " + to_string(l);
      const auto d = pairing_d(e.fan(), k, l).d;
      rb.compare(e, "seidel_relation", product(e.seidel(k), e.seidel(l)), e.shift(e.seidel(add(k, l)), d, l0), g,
                 ctx);
      MSeries kl = product(phi(k), phi(l));
      rb.compare(e, "commutativity", kl, product(phi(l), phi(k)), g, ctx);
      ClassVec classical = e.module().zero();
      if (auto p = e.module().cohomology().phi_product(k, l)) classical = e.module().phi(*p);
      ClassVec diff = kl[0];
      diff -= classical;
      e.truncate(diff);
      rb.record("classical_limit", 0, is_zero(diff), ctx);
    }
  for (size_t a = 0; a < pts.size(); ++a)
    for (size_t b = a; b < pts.size(); ++b)
      for (size_t c = b; c < pts.size(); ++c) {
        if (norm(pts[a]) == 0 || norm(pts[a]) + norm(pts[b]) + norm(pts[c]) > kcoh) continue;
        MSeries lhs = product(product(phi(pts[a]), phi(pts[b])), phi(pts[c]));
        MSeries rhs = product(phi(pts[a]), product(phi(pts[b]), phi(pts[c])));
        rb.compare(e, "associativity", lhs, rhs, g, to_string(pts[a]) + to_string(pts[b]) + to_string(pts[c]));
      }
  return rb.build();
}

// Both sides of the Euler identity that expresses c1 + sum (1-|k|) t_k phi_k
// in the Seidel basis; its coefficients are the inverse mirror map.
// perturb: adds one term to the inverse map before the roundtrip.
inline Report check_inverse_map(const MirrorEngine& e, const std::string& fan, bool perturb = false) {
  ReportBuilder rb(fan);
  auto [lhs, rhs] = e.euler_identity();
  HSeries diff = lhs;
  diff -= rhs;
  for (const auto& [key, c] : diff.terms())
    rb.record("inverse_map_euler", e.space()->order(key.d, key.g), false,
              "phi" + to_string(key.k.k) + " z^" + std::to_string(key.z) + " Q" + to_string(key.d) + " y" +
                  to_string(key.g) + ": " + c.get_str());
  rb.record("inverse_map_euler", 0, true);
  // The inverse of the mirror coordinates composes back to the identity.
  ScalarFamily t = e.mirror_coordinates(e.to_series(e.tau()));
  ScalarFamily y = invert(t);
  if (perturb && !y.empty()) y.begin()->second += HSeries::constant(e.space(), 1);
  for (const auto& [j, tj] : t) {
    HSeries back = compose(tj, y);
    HSeries expect = HSeries::variable(e.space(), j);
    const int gmax = e.policy().gcap;
    HSeries dd = back;
    dd -= expect;
    bool ok = true;
    for (const auto& [key, c] : dd.terms())
      if (sum(key.g) <= gmax) ok = false;
    rb.record("inverse_map_roundtrip", 0, ok, e.vars()[j].name());
  }
  return rb.build();
}

// Divisor equation on the record with the ray variables restored.
// perturb: 1 shifts a ray exponent of one restored term, 2 changes one
// restored coefficient (negative controls).
inline Report check_divisor_equation(const MirrorEngine& e, const std::string& fan, int perturb = 0) {
  ReportBuilder rb(fan);
  const Fan& f = e.fan();
  auto check = [&](const HSeries& s, bool logs, const IntVec& pre, const std::string& what) {
    RestoredSeries r = e.restore_divisor_variables(s, logs, pre);
    if (perturb && !r.terms.empty()) {
      if (perturb == 1) ++r.terms.front().ray_exp[0];
      else r.terms.front().c += 1;
    }
    for (const auto& t : r.terms)
      for (int i = 0; i < f.num_rays(); ++i) {
        int Dterm = t.ray_exp[i] + (pre.empty() ? 0 : pre[i]);
        for (size_t j = 0; j < e.vars().size(); ++j) Dterm += t.g[j] * f.psi(e.vars()[j].point)[i];
        rb.record("divisor_equation", f.theta_degree(t.d) + sum(t.g), Dterm == t.d[i], what);
      }
    if (logs) {
      bool ok = static_cast<int>(r.logs.size()) == f.num_rays();
      for (const auto& [i, c] : r.logs) ok = ok && c == CohClass{{e.module().cohomology().key(f.ray(i)), 1}};
      rb.record("divisor_equation", 0, ok, what + " logarithmic part");
    }
    rb.record("divisor_roundtrip", 0, e.to_slice(r) == s, what);
  };
  check(e.to_series(e.tau()), true, {}, "tau");
  check(e.to_series(e.upsilon()), false, {}, "Upsilon");
  for (const auto& k : e.points_up_to(e.policy().kcoh)) check(e.to_series(e.seidel(k)), false, f.psi(k), "S" + to_string(k));
  return rb.build();
}

inline Report check_routes(const MirrorEngine& e, const std::string& fan, const RouteA& ra, const RouteB& rbd) {
  ReportBuilder rb(fan);
  rb.compare(e, "primitive_form_solve", e.primitive_form_residual(ra), e.zero_series(), e.guard_order());
  GMElement w = deformed_omega(e, rbd);
  std::set<IntVec> keys;
  for (const auto& [k, v] : w.terms) keys.insert(k);
  for (const auto& [k, v] : ra.c) keys.insert(k);
  for (const auto& k : keys) {
    MScalar a = ra.c.count(k) ? ra.c.at(k) : e.zero_scalar();
    MScalar b = w.terms.count(k) ? w.terms.at(k) : e.zero_scalar();
    rb.compare_scalar(e, "route_agreement", a, b, e.guard_order(), "w" + to_string(k));
  }
  rb.compare(e, "route_mirror_map", rbd.tau, e.tau(), e.guard_order());
  return rb.build();
}

inline Report check_routes(const MirrorEngine& e, const std::string& fan) {
  return check_routes(e, fan, e.primitive_form_solve(), e.primitive_form_normalize());
}

// perturb: shifts one restricted structure constant (negative control).
inline Report check_noneq(const MirrorEngine& e, const std::string& fan, std::vector<CohClass> section = {},
                          bool perturb = false) {
  ReportBuilder rb(fan);
  try {
    NoneqResult r = noneq_restrict(e, section);
    if (perturb && !r.products.empty()) r.products.front().via_module[0] += 1;
    rb.record("noneq_unfolding", 0, r.unfolding_rank == r.dimension);
    for (const auto& p : r.products)
      rb.record("noneq_products", e.fan().theta_degree(p.d), p.via_phi == p.via_module,
                std::to_string(p.a) + "*" + std::to_string(p.b) + " Q" + to_string(p.d));
    rb.record("noneq_products", 0, true);
  } catch (const Error& err) {
    rb.record("noneq_unfolding", 0, false, err.what());
  }
  return rb.build();
}

struct SuiteSelection {
  bool birkhoff = true, flow = true, linear = true, homogeneity = true, quantum = true, inverse = true,
       divisor = true, theta = true, jacobi = true, flatness = true, routes = true, localization = true,
       noneq = true;

  // Comma-separated names; "all" selects everything.
  static SuiteSelection parse(const std::string& s) {
    if (s.empty() || s == "all") return {};
    SuiteSelection sel;
    sel.birkhoff = sel.flow = sel.linear = sel.homogeneity = sel.quantum = sel.inverse = sel.divisor = sel.theta =
        sel.jacobi = sel.flatness = sel.routes = sel.localization = sel.noneq = false;
    size_t pos = 0;
    while (pos <= s.size()) {
      size_t end = s.find(',', pos);
      if (end == std::string::npos) end = s.size();
      std::string name = s.substr(pos, end - pos);
      if (name == "birkhoff") sel.birkhoff = true;
      else if (name == "flow") sel.flow = true;
      else if (name == "linear") sel.linear = true;
      else if (name == "homogeneity") sel.homogeneity = true;
      else if (name == "quantum") sel.quantum = true;
      else if (name == "inverse") sel.inverse = true;
      else if (name == "divisor") sel.divisor = true;
      else if (name == "theta") sel.theta = true;
      else if (name == "jacobi") sel.jacobi = true;
      else if (name == "flatness") sel.flatness = true;
      else if (name == "routes") sel.routes = true;
      else if (name == "localization") sel.localization = true;
      else if (name == "noneq") sel.noneq = true;
      else throw Error(ErrorKind::MalformedInput, "unknown suite '" + name + "'");
      pos = end + 1;
    }
    return sel;
  }
};

// seed: RNG seed for the sampled flatness check.
inline Report run_property_suite(const MirrorEngine& e, const std::string& fan, const SuiteSelection& sel = {},
                                 unsigned seed = 7) {
  ReportBuilder rb(fan);
  if (sel.birkhoff) {
    rb.merge(check_residual(e, fan));
    rb.merge(check_uniqueness(e, fan));
    rb.merge(check_base_point(e, fan));
  }
  if (sel.flow) rb.merge(check_flow(e, fan));
  if (sel.linear) rb.merge(check_linear_relation(e, fan));
  if (sel.homogeneity) rb.merge(check_homogeneity(e, fan));
  if (sel.quantum) rb.merge(check_quantum_product(e, fan));
  if (sel.inverse) rb.merge(check_inverse_map(e, fan));
  if (sel.divisor) rb.merge(check_divisor_equation(e, fan));
  if (sel.theta) rb.merge(check_theta(e, fan));
  if (sel.jacobi) rb.merge(check_jacobi(e, fan));
  if (sel.flatness) rb.merge(check_flatness(e, fan, seed));
  if (sel.routes) rb.merge(check_routes(e, fan));
  if (sel.localization) rb.merge(localization_check(e, fan));
  if (sel.noneq) rb.merge(check_noneq(e, fan));
  return rb.build();
}

// ---- negative controls ----------------------------------------------------

// A control perturbs one input of a check by one term; the check must then
// report a failure for its property.
struct ControlOutcome {
  std::string property;
  bool applicable = true;
  bool detected = false;
  std::string witness;
};

namespace detail {

inline bool reports_failure(const Report& r, const std::string& property, std::string& witness) {
  for (const auto& x : r)
    if (x.property == property && !x.pass) {
      witness = x.witness;
      return true;
    }
  return false;
}

inline int unit_index(const MirrorEngine& e) {
  const ClassVec u = e.module().unit();
  for (int c = 0; c < e.rank(); ++c)
    if (!u[c].is_zero()) return c;
  return 0;
}

}  // namespace detail

inline std::vector<ControlOutcome> negative_controls(const MirrorEngine& e, const std::string& fan) {
  std::vector<ControlOutcome> out;
  const int u = detail::unit_index(e);
  const int other = e.rank() > 1 ? (u + 1) % e.rank() : u;
  const Poly zinv = Poly::term(1, Poly::mono(-1)), zpos = Poly::term(1, Poly::mono(1));
  const IntVec origin(e.fan().rank(), 0);
  const IntVec b0 = e.fan().ray(0);
  const int id_y0 = e.vars().empty()
                        ? -1
                        : [&] {
                            IntVec l(e.vars().size(), 0);
                            l[0] = 1;
                            return e.monos().find(e.monos().d(0), l);
                          }();
  auto run = [&](const std::string& property, const std::function<Report()>& check) {
    ControlOutcome c{property, true, false, ""};
    try {
      c.detected = detail::reports_failure(check(), property, c.witness);
    } catch (const Error& err) {
      // The engine refusing the perturbed input is also a detection.
      c.detected = true;
      c.witness = err.what();
    }
    out.push_back(c);
  };
  auto skip = [&](const std::string& property) { out.push_back({property, false, false, "no tracked variable"}); };

  // Factorization.
  run("birkhoff_residual", [&] {
    MirrorEngine x = e;
    x.mutable_P()[u][0][u] = Poly(0);
    return check_residual(x, fan);
  });
  run("birkhoff_shape", [&] {
    MirrorEngine x = e;
    x.mutable_M()[u][0][other] += zpos;
    return check_residual(x, fan);
  });
  run("birkhoff_uniqueness", [&] {
    MirrorEngine x = e;
    x.mutable_P()[u][0][other] += zinv;
    return check_uniqueness(x, fan);
  });
  run("base_point", [&] {
    MirrorEngine x = e;
    x.mutable_M()[u][0][u] += zinv;
    return check_base_point(x, fan);
  });
  run("seidel_classical_limit", [&] {
    MirrorEngine x = e;
    x.mutable_ray_operators()[0][u][0][other] += Poly(1);
    x.clear_derived_caches();
    return check_base_point(x, fan);
  });

  // Flows and the linear relation.
  if (id_y0 >= 0) {
    run("flow_tau", [&] {
      MirrorEngine x = e;
      x.mutable_M()[u][id_y0][u] += zinv;
      return check_flow(x, fan);
    });
    run("flow_upsilon", [&] {
      MirrorEngine x = e;
      x.mutable_P()[u][id_y0][u] += Poly(1);
      return check_flow(x, fan);
    });
    run("inverse_map_euler", [&] {
      MirrorEngine x = e;
      x.mutable_M()[u][id_y0][u] += zinv;
      return check_inverse_map(x, fan);
    });
    run("inverse_map_roundtrip", [&] { return check_inverse_map(e, fan, true); });
  } else {
    for (const char* p : {"flow_tau", "flow_upsilon", "inverse_map_euler", "inverse_map_roundtrip"}) skip(p);
  }
  run("linear_relation", [&] {
    MirrorEngine x = e;
    x.mutable_ray_operators()[0][u][0][u] += Poly(1);
    x.clear_derived_caches();
    return check_linear_relation(x, fan);
  });
  run("homogeneity", [&] {
    MirrorEngine x = e;
    x.mutable_M()[u][0][u] += zinv;
    return check_homogeneity(x, fan);
  });

  // Quantum product.
  {
    // One structure constant shifted by the unit class at mono `id`.
    auto perturbed_product = [&](const MSeries& a, const MSeries& b, int id) -> ProductFn {
      return [&e, a, b, id, u](const MSeries& x, const MSeries& y) {
        MSeries r = e.qproduct(x, y);
        if (x == a && y == b) r[id][u] += Poly(1);
        return r;
      };
    };
    auto phi = [&](const IntVec& k) { return e.constant_series(e.module().phi(k)); };
    std::vector<IntVec> ones;
    for (const auto& p : e.points_up_to(1))
      if (point_data(e.fan(), p).norm == 1) ones.push_back(p);
    const int hi = std::min(1, e.size() - 1);
    run("unit", [&] { return check_quantum_product(e, fan, perturbed_product(unit_series(e), phi(ones[0]), 0)); });
    if (ones.size() >= 2 && e.policy().kcoh >= 3) {
      run("commutativity",
          [&] { return check_quantum_product(e, fan, perturbed_product(phi(ones[0]), phi(ones[1]), hi)); });
      run("associativity",
          [&] { return check_quantum_product(e, fan, perturbed_product(phi(ones[0]), phi(ones[1]), hi)); });
    } else {
      out.push_back({"commutativity", false, false, "needs two norm-1 points and kcoh >= 3"});
      out.push_back({"associativity", false, false, "needs two norm-1 points and kcoh >= 3"});
    }
    run("classical_limit",
        [&] { return check_quantum_product(e, fan, perturbed_product(phi(ones[0]), phi(ones.back()), 0)); });
  }
  {
    // S at a point of norm 2 off the module basis enters only the right-hand
    // side of the Seidel relation.
    std::optional<IntVec> target;
    const auto& bp = e.module().basis_points();
    for (const auto& p : e.points_up_to(2))
      if (point_data(e.fan(), p).norm == 2 && std::find(bp.begin(), bp.end(), p) == bp.end()) {
        target = p;
        break;
      }
    if (target && e.policy().kcoh >= 2)
      run("seidel_relation", [&] {
        MirrorEngine x = e;
        (void)x.seidel(*target);
        x.mutable_seidel_cache()[*target][0][u] += Poly(1);
        return check_quantum_product(x, fan);
      });
    else
      out.push_back({"seidel_relation", false, false, "no norm-2 point off the module basis"});
  }

  // Theta and the Gauss-Manin module.
  auto column_perturbed = [&](const IntVec& k, const Poly& t, int comp) {
    MirrorEngine x = e;
    (void)x.P_column(k);
    x.mutable_P_cache()[k][0][comp] += t;
    return x;
  };
  run("theta_unit", [&] {
    MirrorEngine x = e;
    x.mutable_P()[u][0][u] += zpos;
    return check_theta(x, fan);
  });
  // Each perturbed engine is checked once and shared by the properties it
  // should break.
  auto once = [](std::function<Report()> f) {
    auto memo = std::make_shared<std::optional<Report>>();
    return [f, memo]() -> Report {
      if (!*memo) *memo = f();
      return **memo;
    };
  };
  auto ray_column = once([&] { return check_theta(column_perturbed(b0, Poly(1), u), fan); });
  auto unit_column = once([&] { return check_theta(column_perturbed(origin, zpos, other), fan); });
  run("theta_classical_limit", ray_column);
  run("theta_shift", ray_column);
  run("theta_connection", unit_column);
  run("theta_lambda", unit_column);
  run("theta_grading", unit_column);
  run("jacobi_vs_quantum", [&] { return check_jacobi(column_perturbed(b0, Poly(1), u), fan); });
  if (!e.vars().empty())
    run("gm_flatness", [&] { return check_flatness(e, fan, 7, 1, true); });
  else
    skip("gm_flatness");

  // Primitive form.
  run("primitive_form_solve", [&] {
    RouteA ra = e.primitive_form_solve();
    ra.c.begin()->second[0] += Poly(1);
    return check_routes(e, fan, ra, e.primitive_form_normalize());
  });
  run("route_agreement", [&] {
    RouteA ra = e.primitive_form_solve();
    ra.c.begin()->second[0] += Poly(1);
    return check_routes(e, fan, ra, e.primitive_form_normalize());
  });
  run("route_mirror_map", [&] {
    RouteB rb = e.primitive_form_normalize();
    rb.tau[0][u] += Poly(1);
    return check_routes(e, fan, e.primitive_form_solve(), rb);
  });

  // Localization.
  run("localization_identity", [&] { return localization_check(e, fan, 1, true); });
  run("localization_engine_tie", [&] {
    MirrorEngine x = e;
    x.mutable_I()[0][u] += Poly(1);
    return localization_check(x, fan, 1);
  });

  // Divisor variables.
  run("divisor_equation", [&] { return check_divisor_equation(e, fan, 1); });
  run("divisor_roundtrip", [&] { return check_divisor_equation(e, fan, 2); });

  // Non-equivariant restriction.
  run("noneq_unfolding", [&] {
    const auto& coh = e.module().cohomology();
    NoneqBasis nb = coh.noneq_basis(e.fan().rank());
    std::vector<CohClass> section;
    for (const auto& reps : nb.reps)
      for (const auto& p : reps) section.push_back(CohClass{{coh.key(p), 1}});
    add_to(section.back(), coh.key(origin), 1);
    return check_noneq(e, fan, section);
  });
  run("noneq_products", [&] { return check_noneq(e, fan, {}, true); });
  return out;
}

// ---- Kontsevich recursion and the P^2 comparison -------------------------

// N_1..N_dmax (index 0 unused).
inline std::vector<Integer> kontsevich_numbers(int dmax) {
  std::vector<Integer> N(std::max(dmax, 1) + 1, 0);
  if (dmax >= 1) N[1] = 1;
  auto C = [](long n, long k) {
    Integer r;
    if (k < 0 || k > n) return Integer(0);
    mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return r;
  };
  for (int d = 2; d <= dmax; ++d) {
    Integer s = 0;
    for (int d1 = 1; d1 < d; ++d1) {
      const int d2 = d - d1;
      Integer a = Integer(d1 * d1) * Integer(d2 * d2) * C(3 * d - 4, 3 * d1 - 2);
      Integer b = Integer(d1 * d1 * d1) * Integer(d2) * C(3 * d - 4, 3 * d1 - 1);
      s += N[d1] * N[d2] * (a - b);
    }
    N[d] = s;
  }
  return N;
}

// Truncated series in (q, t): q <= qmax, t <= tmax.
class BiSeries {
 public:
  BiSeries(int qmax, int tmax) : qmax_(qmax), tmax_(tmax), c_((qmax + 1) * (tmax + 1)) {}
  Rational& at(int q, int t) { return c_[q * (tmax_ + 1) + t]; }
  const Rational& at(int q, int t) const { return c_[q * (tmax_ + 1) + t]; }
  int qmax() const { return qmax_; }
  int tmax() const { return tmax_; }

  BiSeries operator+(const BiSeries& o) const {
    BiSeries r = *this;
    for (size_t i = 0; i < c_.size(); ++i) r.c_[i] += o.c_[i];
    return r;
  }
  BiSeries operator*(const BiSeries& o) const {
    BiSeries r(qmax_, tmax_);
    for (int a = 0; a <= qmax_; ++a)
      for (int b = 0; b <= tmax_; ++b) {
        if (at(a, b) == 0) continue;
        for (int c = 0; a + c <= qmax_; ++c)
          for (int d = 0; b + d <= tmax_; ++d) r.at(a + c, b + d) += at(a, b) * o.at(c, d);
      }
    return r;
  }
  BiSeries scaled(const Rational& s) const {
    BiSeries r = *this;
    for (auto& x : r.c_) x *= s;
    return r;
  }
  static BiSeries one(int qmax, int tmax) {
    BiSeries r(qmax, tmax);
    r.at(0, 0) = 1;
    return r;
  }
  // f(q, g(q, t)) for f given as a series in (q, y).
  BiSeries compose(const BiSeries& g) const {
    BiSeries out(qmax_, tmax_);
    BiSeries power = one(qmax_, tmax_);
    for (int j = 0; j <= tmax_; ++j) {
      BiSeries coeff(qmax_, tmax_);
      for (int a = 0; a <= qmax_; ++a) coeff.at(a, 0) = at(a, j);
      out = out + coeff * power;
      power = power * g;
    }
    return out;
  }
  // exp(f) for f without constant term.
  BiSeries exp() const {
    BiSeries out = one(qmax_, tmax_), term = one(qmax_, tmax_);
    for (int n = 1; n <= qmax_ + tmax_; ++n) {
      term = (term * *this).scaled(Rational(1, n));
      out = out + term;
    }
    return out;
  }

 private:
  int qmax_, tmax_;
  std::vector<Rational> c_;
};

struct WdvvComparison {
  std::vector<Integer> oracle;    // N_1..N_dmax
  std::vector<Rational> engine;   // extracted values
  bool match = true;
};

inline TruncationPolicy wdvv_policy(int dmax) {
  TruncationPolicy p;
  p.kcoh = 2;
  p.kvar = 2;
  p.qcap = 3 * dmax;
  p.gcap = std::max(3 * dmax - 5, 1);
  p.zneg = 10;
  return p;
}

// Genus-zero point invariants of P^2 read from the engine: the unit
// coefficients of pt * pt and H * pt in flat coordinates. In the
// point-class coordinate t, with q = Q e^{t_1},
//   [pt * pt]_1 = sum_d N_d q^d t^{3d-4} / (3d-4)!,
//   [H * pt]_1  = sum_d d N_d q^d t^{3d-3} / (3d-3)!.
// The t^{3d-4} coefficient for the largest d sits one order above Gcap; it
// is exact because products need no derivative (guard order).
inline std::vector<Rational> wdvv_extract(const MirrorEngine& e, int dmax) {
  const Fan& f = e.fan();
  const auto& coh = e.module().cohomology();
  if (e.vars().size() != 1) throw Error(ErrorKind::MalformedInput, "expected the point-class direction only");
  const IntVec pt = e.vars()[0].point;
  const int tmax = e.guard_order();
  NoneqBasis nb = coh.noneq_basis(2);
  if (nb.betti(0) != 1 || nb.betti(1) != 1 || nb.betti(2) != 1)
    throw Error(ErrorKind::MalformedInput, "the fan is not P^2");
  const IntVec H = f.ray(0);

  auto coords = [&](const ClassVec& v) {
    return flatten(coh.noneq_reduce(to_cohclass(e.module().to_phi(v, e.internal_degree())), nb));
  };
  // Normalize so that the reduced point and hyperplane classes are 1.
  const Rational pt_norm = coords(e.module().phi(pt))[2];
  const Rational h_norm = coords(e.module().phi(H))[1];
  if (pt_norm == 0 || h_norm == 0) throw Error(ErrorKind::MalformedInput, "degenerate basis");
  const MSeries ptc = e.constant_series(e.module().phi(pt) * Poly(1 / pt_norm));
  const MSeries hc = e.constant_series(e.module().phi(H) * Poly(1 / h_norm));
  const MSeries pp = e.qproduct(ptc, ptc), hp = e.qproduct(hc, ptc), tau = e.tau();

  BiSeries A(dmax, tmax), B(dmax, tmax), t1(dmax, tmax), t2(dmax, tmax);
  for (int id = 0; id < e.size(); ++id) {
    const IntVec& d = e.monos().d(id);
    const int q = d[0], j = e.monos().l(id)[0];
    if (q > dmax || j > tmax) continue;
    A.at(q, j) = coords(pp[id])[0];
    B.at(q, j) = coords(hp[id])[0];
    auto tc = coords(tau[id]);
    t1.at(q, j) = tc[1] / h_norm;
    t2.at(q, j) = tc[2] / pt_norm;
  }
  if (t2.at(0, 1) != 1) throw Error(ErrorKind::MalformedInput, "point coordinate does not start with y");
  // y(q, t) with t2(q, y(q, t)) = t, by fixed-point iteration.
  BiSeries y(dmax, tmax), tvar(dmax, tmax);
  tvar.at(0, 1) = 1;
  BiSeries rest = t2;
  rest.at(0, 1) -= 1;
  for (int it = 0; it <= dmax + tmax; ++it) y = tvar + rest.compose(y).scaled(-1);
  const BiSeries Af = A.compose(y), Bf = B.compose(y), E = t1.compose(y).exp();

  std::vector<Rational> N(dmax + 1, 0);
  if (dmax >= 1) N[1] = Bf.at(1, 0);
  std::vector<BiSeries> Epow{BiSeries::one(dmax, tmax)};
  for (int d = 1; d <= dmax; ++d) Epow.push_back(Epow.back() * E);
  for (int d = 2; d <= dmax; ++d) {
    const int t = 3 * d - 4;
    if (t > tmax) throw Error(ErrorKind::IncompatibleTruncation, "Gcap too small for degree " + std::to_string(d));
    Rational known = 0;
    for (int d2 = 2; d2 < d; ++d2) {
      const int t2e = 3 * d2 - 4;
      known += N[d2] / factorial(t2e) * Epow[d2].at(d - d2, t - t2e);
    }
    N[d] = (Af.at(d, t) - known) * factorial(t);
  }
  return N;
}

inline WdvvComparison wdvv_compare(const MirrorEngine& e, int dmax, std::vector<Integer> oracle = {}) {
  WdvvComparison c;
  c.oracle = oracle.empty() ? kontsevich_numbers(dmax) : oracle;
  c.engine = wdvv_extract(e, dmax);
  for (int d = 1; d <= dmax; ++d)
    if (c.engine[d] != Rational(c.oracle[d])) c.match = false;
  return c;
}

inline Fan projective_plane() {
  FanDescription d;
  d.rank = 2;
  d.rays = {{1, 0}, {0, 1}, {-1, -1}};
  d.max_cones = {{0, 1}, {1, 2}, {0, 2}};
  return load_fan(d);
}

}  // namespace toricmirror
