#pragma once

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "toricmirror/linalg.hpp"
#include "toricmirror/mirror.hpp"
#include "toricmirror/report.hpp"

namespace toricmirror {

// sum_k f_k(z, Q, y) w^{Psi(k)} omega.
struct GMElement {
  std::map<IntVec, MScalar> terms;
  long lost = 0;  // terms dropped by the key cap

  bool is_zero() const {
    for (const auto& [k, f] : terms)
      if (!toricmirror::is_zero(f)) return false;
    return true;
  }
};

inline GMElement gm_basis(const MirrorEngine& e, const IntVec& k, const Poly& c = Poly(1)) {
  GMElement v;
  MScalar f = e.zero_scalar();
  f[0] = c;
  v.terms.emplace(k, std::move(f));
  return v;
}

inline void gm_add(const MirrorEngine& e, GMElement& acc, const IntVec& k, const MScalar& f) {
  auto it = acc.terms.find(k);
  if (it == acc.terms.end()) it = acc.terms.emplace(k, e.zero_scalar()).first;
  for (size_t i = 0; i < f.size(); ++i) it->second[i] += f[i];
}

inline GMElement gm_sum(const MirrorEngine& e, const GMElement& a, const GMElement& b, const Rational& sb = 1) {
  GMElement out = a;
  out.lost += b.lost;
  for (const auto& [k, f] : b.terms) {
    MScalar g = f;
    for (auto& p : g) p *= sb;
    gm_add(e, out, k, g);
  }
  return out;
}

inline GMElement gm_scale(const MirrorEngine& e, const MScalar& s, const GMElement& v) {
  GMElement out;
  out.lost = v.lost;
  for (const auto& [k, f] : v.terms) out.terms.emplace(k, e.multiply(s, f));
  return out;
}

// Key cap for Gauss-Manin elements; large enough that checks never lose terms.
inline int gm_default_cap(const MirrorEngine& e) { return e.internal_degree() + e.policy().kcoh; }

// w^{Psi(k)} * w^{Psi(l)} = Q^{d(k,l)} w^{Psi(k+l)}.
inline GMElement gm_multiply(const MirrorEngine& e, const IntVec& k, const GMElement& v, int cap = -1) {
  if (cap < 0) cap = gm_default_cap(e);
  GMElement out;
  out.lost = v.lost;
  const IntVec zero_l(e.vars().size(), 0);
  for (const auto& [l, f] : v.terms) {
    if (toricmirror::is_zero(f)) continue;
    const IntVec kl = add(k, l);
    if (point_data(e.fan(), kl).norm > cap) {
      ++out.lost;
      continue;
    }
    gm_add(e, out, kl, e.shift(f, pairing_d(e.fan(), k, l).d, zero_l));
  }
  return out;
}

// lambda_i (w^l omega) = z l_i w^l omega + sum_k k_i y_k Q^{d(k,l)} w^{k+l} omega,
// with y_{b_j} = 1 on the slice and untracked y_k = 0.
inline GMElement gm_lambda_action(const MirrorEngine& e, int i, const GMElement& v, int cap = -1) {
  GMElement out;
  out.lost = v.lost;
  for (const auto& [l, f] : v.terms) {
    if (l[i] == 0) continue;
    MScalar g = f;
    for (auto& p : g) p = p.shifted_z(1) * Rational(l[i]);
    gm_add(e, out, l, g);
  }
  for (const auto& b : e.fan().rays()) {
    if (b[i] == 0) continue;
    GMElement m = gm_multiply(e, b, v, cap);
    out = gm_sum(e, out, m, b[i]);
  }
  for (size_t j = 0; j < e.vars().size(); ++j) {
    const IntVec& k = e.vars()[j].point;
    if (k[i] == 0) continue;
    GMElement m = gm_multiply(e, k, v, cap);
    for (auto& [key, f] : m.terms) f = e.times_var(f, static_cast<int>(j));
    out = gm_sum(e, out, m, k[i]);
  }
  return out;
}

// nabla_{y_j}: derivative of the coefficients plus z^{-1} w^{Psi(k_j)}.
inline GMElement gm_connection(const MirrorEngine& e, int j, const GMElement& v, int cap = -1) {
  GMElement out;
  out.lost = v.lost;
  for (const auto& [l, f] : v.terms) out.terms.emplace(l, e.derive(f, j));
  GMElement m = gm_multiply(e, e.vars()[j].point, v, cap);
  for (auto& [k, f] : m.terms)
    for (auto& p : f) p = p.shifted_z(-1);
  return gm_sum(e, out, m);
}

// Theta(sum f_l w^l omega) = sum f_l P(phi_l).
inline MSeries theta_apply(const MirrorEngine& e, const GMElement& v) {
  MSeries out = e.zero_series();
  for (const auto& [l, f] : v.terms) {
    if (toricmirror::is_zero(f)) continue;
    MSeries s = e.scale(f, e.P_column(l));
    for (int id = 0; id < e.size(); ++id) out[id] += s[id];
  }
  return out;
}

inline MSeries lambda_times(const MirrorEngine& e, int i, const MSeries& x) {
  const Poly lam = Poly::lambda(i, e.fan().rank());
  MSeries out = x;
  for (auto& v : out) {
    for (auto& p : v) p = p * lam;
    e.truncate(v);
  }
  return out;
}

// prod_i prod_{c=0}^{Psi_i(k)-1} (u_i - c z): the classical limit of P(phi_k).
inline ClassVec classical_shift(const MirrorEngine& e, const IntVec& k) {
  const auto& mod = e.module();
  const IntVec psi = e.fan().psi(k);
  ClassVec v = mod.unit();
  for (int i = 0; i < e.fan().num_rays(); ++i)
    for (int c = 0; c < psi[i]; ++c) {
      ClassVec w = mod.mul_u(i, v);
      w -= v * Poly::term(c, Poly::mono(1));
      v = w;
      e.truncate(v);
    }
  return v;
}

inline std::vector<IntVec> points_of_norm_at_most(const MirrorEngine& e, int cap) { return e.points_up_to(cap); }

// Random GM element with small integer coefficients on points |l| <= cap.
inline GMElement random_gm_element(const MirrorEngine& e, std::mt19937& rng, int cap, int nterms = 4) {
  auto pts = e.points_up_to(cap);
  std::uniform_int_distribution<size_t> pick_pt(0, pts.size() - 1);
  std::uniform_int_distribution<int> pick_mono(0, e.size() - 1), pick_c(-3, 3), pick_z(-1, 1);
  GMElement v;
  for (int t = 0; t < nterms; ++t) {
    MScalar f = e.zero_scalar();
    int id = t == 0 ? 0 : pick_mono(rng);
    int c = pick_c(rng);
    if (c == 0) c = 1;
    f[id] = Poly::term(c, Poly::mono(pick_z(rng)));
    gm_add(e, v, pts[pick_pt(rng)], f);
  }
  return v;
}

// The five properties of Theta, plus the order-zero (classical) form of the
// columns and the Jacobi consistency at z = 0.
inline Report check_theta(const MirrorEngine& e, const std::string& fan_name) {
  ReportBuilder rb(fan_name);
  const int kcoh = e.policy().kcoh;
  const int gint = e.guard_order();
  const int D = e.fan().rank();

  // (1) Theta(omega) = Upsilon.
  rb.compare(e, "theta_unit", theta_apply(e, gm_basis(e, IntVec(D, 0))), e.upsilon(), gint);

  // Classical limit of the columns.
  for (const auto& k : e.points_up_to(kcoh)) {
    ClassVec diff = e.P_column(k)[0];
    diff -= classical_shift(e, k);
    e.truncate(diff);
    rb.record("theta_classical_limit", 0, is_zero(diff), "column " + to_string(k));
  }

  for (const auto& k : e.points_up_to(kcoh)) {
    const int nk = point_data(e.fan(), k).norm;
    for (const auto& l : e.points_up_to(kcoh - nk)) {
      // (2) multiplicativity.
      const auto d = pairing_d(e.fan(), k, l).d;
      MSeries lhs = theta_apply(e, gm_multiply(e, k, gm_basis(e, l)));
      MSeries rhs = e.shift(e.solve_P_column(add(k, l)), d, IntVec(e.vars().size(), 0));
      rb.compare(e, "theta_shift", lhs, rhs, gint, "k=" + to_string(k) + " l=" + to_string(l));
    }
  }

  // (3) d/dy_j Theta(v) + z^{-1} S_{k_j} * Theta(v) = Theta(nabla_j v).
  for (size_t j = 0; j < e.vars().size(); ++j) {
    const IntVec& k = e.vars()[j].point;
    for (const auto& l : e.points_up_to(std::max(0, kcoh - e.vars()[j].norm))) {
      GMElement v = gm_basis(e, l);
      MSeries th = theta_apply(e, v);
      MSeries lhs = e.derive(th, static_cast<int>(j));
      MSeries s = e.apply_rays(e.fan().psi(k), th);
      for (int id = 0; id < e.size(); ++id)
        for (int c = 0; c < e.rank(); ++c) lhs[id][c] += s[id][c].shifted_z(-1);
      MSeries rhs = theta_apply(e, gm_connection(e, static_cast<int>(j), v));
      rb.compare(e, "theta_connection", lhs, rhs, gint - 1, "k=" + to_string(k) + " l=" + to_string(l));
    }
  }

  // (4) Theta(lambda_i v) = lambda_i Theta(v).
  for (int i = 0; i < D; ++i)
    for (const auto& l : e.points_up_to(kcoh)) {
      GMElement v = gm_basis(e, l);
      MSeries lhs = theta_apply(e, gm_lambda_action(e, i, v));
      MSeries rhs = lambda_times(e, i, theta_apply(e, v));
      rb.compare(e, "theta_lambda", lhs, rhs, gint, "i=" + std::to_string(i + 1) + " l=" + to_string(l));
    }

  // (5) Theta(w^l omega) is homogeneous of weight |l|.
  for (const auto& l : e.points_up_to(kcoh)) {
    const int nl = point_data(e.fan(), l).norm;
    HSeries s = e.to_series(e.P_column(l));
    std::string w;
    for (int x : s.weights())
      if (x != nl) w = "column " + to_string(l) + " has weight " + std::to_string(x);
    rb.record("theta_grading", 0, w.empty(), w);
  }
  return rb.build();
}

// Flatness of the Gauss-Manin connection on random elements.
// perturb: adds a constant term to nabla_{y_0}, which must break flatness.
inline Report check_flatness(const MirrorEngine& e, const std::string& fan_name, unsigned seed = 7, int samples = 3,
                             bool perturb = false) {
  ReportBuilder rb(fan_name);
  std::mt19937 rng(seed);
  const int nv = static_cast<int>(e.vars().size());
  for (int s = 0; s < samples; ++s) {
    GMElement v = random_gm_element(e, rng, e.policy().kcoh);
    for (int a = 0; a < nv; ++a)
      for (int b = a + 1; b < nv; ++b) {
        auto nabla = [&](int j, const GMElement& u) {
          GMElement r = gm_connection(e, j, u);
          if (perturb && j == 0) r = gm_sum(e, r, gm_basis(e, IntVec(e.fan().rank(), 0)));
          return r;
        };
        GMElement x = nabla(a, nabla(b, v));
        GMElement y = nabla(b, nabla(a, v));
        GMElement diff = gm_sum(e, x, y, -1);
        for (const auto& [k, f] : diff.terms) {
          MScalar zero = e.zero_scalar();
          rb.compare_scalar(e, "gm_flatness", f, zero, e.guard_order() - 2,
                            "sample " + std::to_string(s) + " [" + e.vars()[a].name() + "," + e.vars()[b].name() +
                                "] at w" + to_string(k));
        }
      }
  }
  return rb.build();
}

// Jacobi ring structure constants transported through Theta at z = 0:
// Q^{d(k,l)} Theta(w^{k+l})|_{z=0} against S_k * Theta(w^l)|_{z=0}.
struct JacobiEntry {
  IntVec k, l;
  HSeries jacobi;   // transported w^{Psi(k)} w^{Psi(l)}
  HSeries quantum;  // S_k * S_l * Upsilon at z = 0
};

inline MSeries z_zero(const MSeries& x) {
  MSeries out = x;
  for (auto& v : out)
    for (auto& p : v) p = p.z_coefficient(0);
  return out;
}

inline std::vector<JacobiEntry> jacobi_structure_constants(const MirrorEngine& e) {
  std::vector<JacobiEntry> out;
  const int kcoh = e.policy().kcoh;
  const MSeries ups0 = z_zero(e.upsilon());
  for (const auto& k : e.points_up_to(kcoh)) {
    const int nk = point_data(e.fan(), k).norm;
    for (const auto& l : e.points_up_to(kcoh - nk)) {
      if (l < k && point_data(e.fan(), l).norm == nk) continue;
      const auto d = pairing_d(e.fan(), k, l).d;
      MSeries jac = z_zero(e.shift(e.P_column(add(k, l)), d, IntVec(e.vars().size(), 0)));
      MSeries q = e.qproduct(e.seidel(k), e.qproduct(e.seidel(l), ups0));
      out.push_back({k, l, e.to_series(jac), e.to_series(q)});
    }
  }
  return out;
}

inline Report check_jacobi(const MirrorEngine& e, const std::string& fan_name) {
  ReportBuilder rb(fan_name);
  const int kcoh = e.policy().kcoh;
  for (const auto& k : e.points_up_to(kcoh)) {
    const int nk = point_data(e.fan(), k).norm;
    for (const auto& l : e.points_up_to(kcoh - nk)) {
      const auto d = pairing_d(e.fan(), k, l).d;
      MSeries jac = z_zero(e.shift(e.P_column(add(k, l)), d, IntVec(e.vars().size(), 0)));
      MSeries q = e.qproduct(e.seidel(k), z_zero(e.P_column(l)));
      rb.compare(e, "jacobi_vs_quantum", jac, q, e.guard_order(), "k=" + to_string(k) + " l=" + to_string(l));
    }
  }
  return rb.build();
}

// omega(y+) = exp(sum_{k,n} y_{k,n} z^{n-1} w^{Psi(k)}) omega.
inline GMElement deformed_omega(const MirrorEngine& e, const RouteB& rb) {
  const int D = e.fan().rank();
  GMElement result = gm_basis(e, IntVec(D, 0));
  GMElement term = result;
  for (int j = 1; !term.is_zero(); ++j) {
    if (j > 4 * (e.monos().max_order() + 2))
      throw Error(ErrorKind::RouteDisagreement, "exponential of the deformation does not terminate");
    GMElement next;
    for (const auto& [kn, y] : rb.y) {
      MScalar c = y;
      for (auto& p : c) p = p.shifted_z(kn.second - 1);
      next = gm_sum(e, next, gm_scale(e, c, gm_multiply(e, kn.first, term, 1 << 20)));
    }
    for (auto& [k, f] : next.terms)
      for (auto& p : f) p *= Rational(1, j);
    for (auto it = next.terms.begin(); it != next.terms.end();)
      it = toricmirror::is_zero(it->second) ? next.terms.erase(it) : std::next(it);
    term = next;
    result = gm_sum(e, result, term);
  }
  for (auto it = result.terms.begin(); it != result.terms.end();)
    it = toricmirror::is_zero(it->second) ? result.terms.erase(it) : std::next(it);
  return result;
}

struct PrimitiveFormResult {
  std::optional<RouteA> a;
  std::optional<RouteB> b;
  bool agree = true;
  std::string disagreement;
};

// route: "a", "b" or "both". Route "both" throws RouteDisagreement when the
// deformed omega differs from the solved primitive form or the route-B
// mirror map differs from tau.
inline PrimitiveFormResult primitive_form(const MirrorEngine& e, const std::string& route) {
  PrimitiveFormResult r;
  if (route == "a" || route == "both") r.a = e.primitive_form_solve();
  if (route == "b" || route == "both") r.b = e.primitive_form_normalize();
  if (route != "a" && route != "b" && route != "both")
    throw Error(ErrorKind::MalformedInput, "unknown route '" + route + "'");
  if (route == "both") {
    GMElement w = deformed_omega(e, *r.b);
    std::set<IntVec> keys;
    for (const auto& [k, f] : w.terms) keys.insert(k);
    for (const auto& [k, f] : r.a->c) keys.insert(k);
    for (const auto& k : keys) {
      MScalar fa = r.a->c.count(k) ? r.a->c.at(k) : e.zero_scalar();
      MScalar fb = w.terms.count(k) ? w.terms.at(k) : e.zero_scalar();
      for (int id = 0; id < e.size(); ++id)
        if (fa[id] != fb[id]) {
          r.agree = false;
          r.disagreement = "coefficient of w" + to_string(k) + " at " + describe_mono(e, id) + ": " +
                           fa[id].to_string(0) + " vs " + fb[id].to_string(0);
          break;
        }
      if (!r.agree) break;
    }
    if (r.agree) {
      MSeries t = e.tau();
      for (int id = 0; id < e.size() && r.agree; ++id)
        if (t[id] != r.b->tau[id]) {
          r.agree = false;
          r.disagreement = "mirror map differs at " + describe_mono(e, id);
        }
    }
    if (!r.agree) throw Error(ErrorKind::RouteDisagreement, r.disagreement);
  }
  return r;
}

// ---- non-equivariant restriction -----------------------------------------

struct PotentialTerm {
  IntVec k;            // exponent of x
  IntVec q;            // Novikov exponent beta(k)
  std::string coeff;   // "1" for rays, "y(k)" for deformation variables
};

struct NoneqProduct {
  int a = 0, b = 0;                              // flattened section indices
  IntVec d;                                      // Novikov exponent
  std::vector<Rational> via_phi, via_module;     // flattened coordinates
};

struct NoneqResult {
  NoneqBasis basis;
  std::vector<std::pair<int, IntVec>> flat;  // (degree, representative)
  std::vector<CohClass> section;
  std::vector<PotentialTerm> potential;
  int unfolding_rank = 0;
  int dimension = 0;
  std::vector<NoneqProduct> products;
  bool products_agree = true;
};

inline std::vector<Rational> flatten(const std::vector<std::vector<Rational>>& v) {
  std::vector<Rational> out;
  for (const auto& x : v) out.insert(out.end(), x.begin(), x.end());
  return out;
}

inline CohClass to_cohclass(const CohClassZ& z) {
  CohClass c;
  for (const auto& [k, p] : z) {
    Rational v = p.coefficient(Poly::kZeroZ);
    if (p.size() > 1 || (p.size() == 1 && v == 0))
      throw Error(ErrorKind::MalformedInput, "class carries z or lambda: " + p.to_string(0));
    add_to(c, k, v);
  }
  return c;
}

inline std::string potential_string(const std::vector<PotentialTerm>& f) {
  std::string s;
  for (const auto& t : f) {
    if (!s.empty()) s += " + ";
    std::string m;
    if (t.coeff != "1") m += t.coeff;
    bool qzero = std::all_of(t.q.begin(), t.q.end(), [](int x) { return x == 0; });
    if (!qzero) m += (m.empty() ? "" : "*") + std::string("Q^") + to_string(t.q);
    bool xzero = std::all_of(t.k.begin(), t.k.end(), [](int x) { return x == 0; });
    if (!xzero) m += (m.empty() ? "" : "*") + std::string("x^") + to_string(t.k);
    s += m.empty() ? "1" : m;
  }
  return s;
}

// section: lifts of the non-equivariant basis, flattened by degree; empty
// means the default (representative points).
inline NoneqResult noneq_restrict(const MirrorEngine& e, std::vector<CohClass> section = {}) {
  const Fan& f = e.fan();
  const auto& coh = e.module().cohomology();
  NoneqResult r;
  r.basis = coh.noneq_basis(f.rank());
  for (size_t j = 0; j < r.basis.reps.size(); ++j)
    for (const auto& p : r.basis.reps[j]) r.flat.push_back({static_cast<int>(j), p});
  r.dimension = static_cast<int>(r.flat.size());
  if (section.empty())
    for (const auto& [j, p] : r.flat) section.push_back(CohClass{{coh.key(p), 1}});
  if (static_cast<int>(section.size()) != r.dimension)
    throw Error(ErrorKind::SectionNotALift, "section has " + std::to_string(section.size()) + " entries, expected " +
                                                std::to_string(r.dimension));
  for (int i = 0; i < r.dimension; ++i) {
    auto red = flatten(coh.noneq_reduce(section[i], r.basis));
    for (int t = 0; t < r.dimension; ++t)
      if (red[t] != (t == i ? 1 : 0))
        throw Error(ErrorKind::SectionNotALift, "entry " + std::to_string(i + 1) + " does not reduce to " +
                                                    to_string(r.flat[i].second));
  }
  r.section = section;

  // Potential on the slice: sum_i Q^{beta(b_i)} x^{b_i} + sum_k y_k Q^{beta(k)} x^k.
  for (const auto& b : f.rays()) r.potential.push_back({b, f.beta(b), "1"});
  for (const auto& v : e.vars()) r.potential.push_back({v.point, f.beta(v.point), "y" + to_string(v.point)});

  // Unfolding: the classes d tau / d(direction) at the base point, Q = 0.
  RatMatrix rows;
  const MSeries tau = e.tau();
  auto reduce_class = [&](const ClassVec& v) { return flatten(coh.noneq_reduce(to_cohclass(e.module().to_phi(v, e.internal_degree())), r.basis)); };
  for (const auto& b : f.rays()) rows.push_back(reduce_class(e.seidel(b)[0]));
  for (size_t j = 0; j < e.vars().size(); ++j) rows.push_back(reduce_class(e.derive(tau, static_cast<int>(j))[0]));
  r.unfolding_rank = rows.empty() ? 0 : rank(rows);
  if (r.unfolding_rank < r.dimension)
    throw Error(ErrorKind::RankDeficientUnfolding, "unfolding rank " + std::to_string(r.unfolding_rank) + " < " +
                                                       std::to_string(r.dimension));

  // Structure constants at y = 0, two ways.
  std::vector<std::vector<Rational>> module_basis_reduced;
  for (const auto& p : e.module().basis_points())
    module_basis_reduced.push_back(flatten(coh.noneq_reduce(CohClass{{coh.key(p), 1}}, r.basis)));
  const IntVec l0(e.vars().size(), 0);
  for (int a = 0; a < r.dimension; ++a)
    for (int b = a; b < r.dimension; ++b) {
      if (r.flat[a].first + r.flat[b].first > e.policy().kcoh) continue;
      MSeries prod = e.qproduct(e.from_class(section[a]), e.from_class(section[b]));
      for (int id = 0; id < e.size(); ++id) {
        if (e.monos().l(id) != l0 || is_zero(prod[id])) continue;
        NoneqProduct np{a, b, e.monos().d(id), {}, {}};
        np.via_phi = flatten(coh.noneq_reduce(to_cohclass(e.module().to_phi(prod[id], e.internal_degree())), r.basis));
        np.via_module.assign(r.dimension, 0);
        for (int c = 0; c < e.rank(); ++c) {
          Rational v = prod[id][c].lambda_free_part().coefficient(Poly::kZeroZ);
          for (int t = 0; t < r.dimension; ++t) np.via_module[t] += v * module_basis_reduced[c][t];
        }
        if (np.via_phi != np.via_module) r.products_agree = false;
        r.products.push_back(np);
      }
    }
  return r;
}

}  // namespace toricmirror
