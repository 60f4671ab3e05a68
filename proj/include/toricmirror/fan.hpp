#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "toricmirror/errors.hpp"
#include "toricmirror/linalg.hpp"
#include "toricmirror/rational.hpp"

namespace toricmirror {

// Raw input as it appears in a fan file. Cones are 0-based here; the JSON
// reader converts from the 1-based file format.
struct FanDescription {
  int rank = 0;
  std::vector<IntVec> rays;
  std::vector<std::vector<int>> max_cones;
  std::optional<int> splitting_cone;
  std::optional<IntVec> polarization;
};

// A class in the lattice of relations L = {d in Z^m : sum d_i b_i = 0}.
struct CurveClass {
  IntVec d;
  int theta_degree = 0;
  bool operator<(const CurveClass& o) const { return d < o.d; }
  bool operator==(const CurveClass& o) const { return d == o.d; }
};

struct PointData {
  IntVec k;
  std::vector<int> min_cone;  // support of psi, a face of some maximal cone
  int max_cone = -1;          // a maximal cone containing k
  IntVec psi;
  int norm = 0;               // |k| = sum psi
  IntVec beta;
};

class Fan {
 public:
  int rank() const { return rank_; }
  int num_rays() const { return static_cast<int>(rays_.size()); }
  int num_cones() const { return static_cast<int>(cones_.size()); }
  const std::vector<IntVec>& rays() const { return rays_; }
  const IntVec& ray(int i) const { return rays_[i]; }
  const std::vector<std::vector<int>>& cones() const { return cones_; }
  const std::vector<int>& cone(int c) const { return cones_[c]; }
  int splitting_cone() const { return splitting_; }
  const IntVec& polarization() const { return theta_; }
  // Certificate that a strictly convex support function exists: a theta with
  // theta.g >= 1 on every Mori generator g.
  const IntVec& convexity_certificate() const { return certificate_; }
  bool theta_from_input() const { return theta_from_input_; }
  bool is_complete() const { return complete_; }
  const std::vector<IntVec>& mori_generators() const { return generators_; }

  // Rows of the inverse of the matrix with columns b_j (j in cone c), ordered
  // as cone(c). Row t pairs to 1 with the t-th ray of the cone.
  const std::vector<IntVec>& dual_basis(int c) const { return dual_[c]; }

  bool in_cone(int c, int ray_index) const {
    const auto& s = cones_[c];
    return std::binary_search(s.begin(), s.end(), ray_index);
  }

  // Coordinates of k in the basis of cone c, indexed by ray (zero off the cone).
  IntVec cone_coordinates(int c, const IntVec& k) const {
    IntVec psi(num_rays(), 0);
    const auto& s = cones_[c];
    for (size_t t = 0; t < s.size(); ++t) psi[s[t]] = dot(dual_[c][t], k);
    return psi;
  }

  std::optional<IntVec> psi_if_inside(const IntVec& k) const {
    for (int c = 0; c < num_cones(); ++c) {
      IntVec psi = cone_coordinates(c, k);
      if (std::all_of(psi.begin(), psi.end(), [](int x) { return x >= 0; })) return psi;
    }
    return std::nullopt;
  }

  IntVec psi(const IntVec& k) const {
    auto p = psi_if_inside(k);
    if (!p) throw Error(ErrorKind::OutsideSupport, "point " + to_string(k) + " is not in the support");
    return *p;
  }

  // The splitting through I0: linear, agrees with psi on the splitting cone.
  IntVec splitting(const IntVec& k) const { return cone_coordinates(splitting_, k); }

  IntVec beta(const IntVec& k) const { return sub(psi(k), splitting(k)); }

  IntVec point_of(const IntVec& psi) const {
    IntVec k(rank_, 0);
    for (int i = 0; i < num_rays(); ++i)
      for (int a = 0; a < rank_; ++a) k[a] += psi[i] * rays_[i][a];
    return k;
  }

  bool is_face(const std::vector<int>& support) const {
    for (const auto& s : cones_)
      if (std::includes(s.begin(), s.end(), support.begin(), support.end())) return true;
    return false;
  }

  int theta_degree(const IntVec& d) const { return dot(theta_, d); }
  int c1_degree(const IntVec& d) const { return sum(d); }

 private:
  friend Fan load_fan(const FanDescription&);
  int rank_ = 0;
  std::vector<IntVec> rays_;
  std::vector<std::vector<int>> cones_;
  std::vector<std::vector<IntVec>> dual_;
  int splitting_ = 0;
  IntVec theta_;
  IntVec certificate_;
  bool theta_from_input_ = false;
  bool complete_ = false;
  std::vector<IntVec> generators_;
};

namespace detail {

inline std::string cone_name(const std::vector<int>& c) {
  std::string s = "{";
  for (size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + std::to_string(c[i] + 1);
  return s + "}";
}

// Does cone a contain a point of positive weight on its rays outside b that
// also lies in cone b? Then a and b do not meet along a common face.
inline bool overlaps_beyond_face(const std::vector<IntVec>& rays, const std::vector<int>& a,
                                 const std::vector<int>& b, int D) {
  std::vector<int> only_a;
  for (int i : a)
    if (!std::binary_search(b.begin(), b.end(), i)) only_a.push_back(i);
  if (only_a.empty()) return false;
  const size_t na = a.size(), nb = b.size(), n = na + nb;
  RatMatrix A;
  std::vector<Rational> rhs;
  for (int r = 0; r < D; ++r) {
    std::vector<Rational> row(n);
    for (size_t t = 0; t < na; ++t) row[t] = rays[a[t]][r];
    for (size_t t = 0; t < nb; ++t) row[na + t] = -rays[b[t]][r];
    A.push_back(row);
    for (auto& v : row) v = -v;
    A.push_back(row);
    rhs.push_back(0);
    rhs.push_back(0);
  }
  std::vector<Rational> norm(n), obj(n);
  for (size_t t = 0; t < na; ++t) {
    norm[t] = 1;
    if (std::binary_search(only_a.begin(), only_a.end(), a[t])) obj[t] = 1;
  }
  A.push_back(norm);
  rhs.push_back(1);
  auto res = solve_lp(A, rhs, obj);
  return res.status == LPResult::Optimal && res.value > 0;
}

}  // namespace detail

inline Fan load_fan(const FanDescription& raw) {
  using detail::cone_name;
  Fan f;
  const int D = raw.rank;
  if (D <= 0) throw Error(ErrorKind::MalformedInput, "rank must be positive");
  if (raw.rays.empty()) throw Error(ErrorKind::MalformedInput, "no rays");
  for (const auto& r : raw.rays)
    if (static_cast<int>(r.size()) != D) throw Error(ErrorKind::MalformedInput, "ray of wrong length");
  if (raw.max_cones.empty()) throw Error(ErrorKind::MalformedInput, "no maximal cones");
  f.rank_ = D;
  f.rays_ = raw.rays;
  const int m = static_cast<int>(raw.rays.size());

  std::set<std::vector<int>> seen;
  for (auto c : raw.max_cones) {
    std::sort(c.begin(), c.end());
    for (int i : c)
      if (i < 0 || i >= m) throw Error(ErrorKind::MalformedInput, "cone index out of range");
    if (std::adjacent_find(c.begin(), c.end()) != c.end())
      throw Error(ErrorKind::MalformedInput, "repeated ray in cone " + cone_name(c));
    if (static_cast<int>(c.size()) != D)
      throw Error(ErrorKind::NonUnimodularCone, "cone " + cone_name(c) + " is not full-dimensional simplicial");
    if (!seen.insert(c).second) throw Error(ErrorKind::MalformedInput, "duplicate cone " + cone_name(c));
    f.cones_.push_back(c);
  }
  std::vector<bool> used(m, false);
  for (const auto& c : f.cones_)
    for (int i : c) used[i] = true;
  for (int i = 0; i < m; ++i)
    if (!used[i]) throw Error(ErrorKind::MalformedInput, "ray " + std::to_string(i + 1) + " lies in no cone");

  for (const auto& c : f.cones_) {
    RatMatrix B(D, std::vector<Rational>(D));
    for (int a = 0; a < D; ++a)
      for (int t = 0; t < D; ++t) B[a][t] = f.rays_[c[t]][a];
    Rational det = determinant(B);
    if (abs(det) != 1)
      throw Error(ErrorKind::NonUnimodularCone, "cone " + cone_name(c) + " has determinant " + det.get_str());
    RatMatrix inv = *inverse(B);
    std::vector<IntVec> rows(D, IntVec(D));
    for (int t = 0; t < D; ++t)
      for (int a = 0; a < D; ++a) rows[t][a] = static_cast<int>(inv[t][a].get_num().get_si());
    f.dual_.push_back(rows);
  }

  const int nc = f.num_cones();
  for (int x = 0; x < nc; ++x)
    for (int y = 0; y < nc; ++y)
      if (x != y && detail::overlaps_beyond_face(f.rays_, f.cones_[x], f.cones_[y], D))
        throw Error(ErrorKind::NotAFan,
                    "cones " + cone_name(f.cones_[x]) + " and " + cone_name(f.cones_[y]) + " overlap");

  // Support convexity: every facet lying in a single maximal cone must have
  // all rays on the inner side of its hyperplane.
  std::map<std::vector<int>, int> facet_count;
  for (const auto& c : f.cones_)
    for (int drop = 0; drop < D; ++drop) {
      std::vector<int> facet;
      for (int t = 0; t < D; ++t)
        if (t != drop) facet.push_back(c[t]);
      ++facet_count[facet];
    }
  f.complete_ = true;
  for (int ci = 0; ci < nc; ++ci) {
    const auto& c = f.cones_[ci];
    for (int drop = 0; drop < D; ++drop) {
      std::vector<int> facet;
      for (int t = 0; t < D; ++t)
        if (t != drop) facet.push_back(c[t]);
      if (facet_count[facet] > 1) continue;
      f.complete_ = false;
      const IntVec& normal = f.dual_[ci][drop];
      for (int j = 0; j < m; ++j)
        if (dot(normal, f.rays_[j]) < 0)
          throw Error(ErrorKind::NonConvexSupport, "ray " + std::to_string(j + 1) +
                                                       " lies beyond the boundary facet " + cone_name(facet) +
                                                       " of cone " + cone_name(c));
    }
  }

  // Mori generators e_j - (coordinates of b_j in cone I), j off the cone.
  std::set<IntVec> gens;
  for (int ci = 0; ci < nc; ++ci)
    for (int j = 0; j < m; ++j) {
      if (f.in_cone(ci, j)) continue;
      IntVec g(m, 0);
      g[j] = 1;
      IntVec coords = f.cone_coordinates(ci, f.rays_[j]);
      for (int i = 0; i < m; ++i) g[i] -= coords[i];
      gens.insert(g);
    }
  f.generators_.assign(gens.begin(), gens.end());

  auto satisfies = [&](const IntVec& theta) {
    for (const auto& g : f.generators_)
      if (dot(theta, g) < 1) return false;
    return true;
  };

  // Certificate: minimize the l1 norm of theta subject to theta.g >= 1.
  {
    const size_t nv = 2 * m;
    RatMatrix A;
    std::vector<Rational> rhs;
    for (const auto& g : f.generators_) {
      std::vector<Rational> row(nv);
      for (int i = 0; i < m; ++i) {
        row[i] = -g[i];
        row[m + i] = g[i];
      }
      A.push_back(row);
      rhs.push_back(-1);
    }
    std::vector<Rational> obj(nv, Rational(-1));
    IntVec theta(m, 0);
    if (!f.generators_.empty()) {
      auto res = solve_lp(A, rhs, obj);
      if (res.status != LPResult::Optimal)
        throw Error(ErrorKind::NoStrictlyConvexSupportFunction,
                    "the wall inequalities theta.g >= 1 are infeasible");
      Integer den = 1;
      for (const auto& v : res.x) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), v.get_den_mpz_t());
      for (int i = 0; i < m; ++i) {
        Rational v = (res.x[i] - res.x[m + i]) * den;
        theta[i] = static_cast<int>(v.get_num().get_si());
      }
    }
    f.certificate_ = theta;
  }

  if (raw.polarization) {
    if (static_cast<int>(raw.polarization->size()) != m)
      throw Error(ErrorKind::BadPolarization, "polarization has wrong length");
    for (const auto& g : f.generators_)
      if (dot(*raw.polarization, g) < 1)
        throw Error(ErrorKind::BadPolarization, "theta pairs non-positively with the class " + to_string(g));
    f.theta_ = *raw.polarization;
    f.theta_from_input_ = true;
  } else {
    IntVec ones(m, 1);
    f.theta_ = satisfies(ones) ? ones : f.certificate_;
  }

  f.splitting_ = raw.splitting_cone.value_or(0);
  if (f.splitting_ < 0 || f.splitting_ >= nc) throw Error(ErrorKind::MalformedInput, "splitting cone out of range");
  return f;
}

inline PointData point_data(const Fan& f, const IntVec& k) {
  if (static_cast<int>(k.size()) != f.rank()) throw Error(ErrorKind::MalformedInput, "point of wrong length");
  PointData p;
  p.k = k;
  for (int c = 0; c < f.num_cones(); ++c) {
    IntVec psi = f.cone_coordinates(c, k);
    if (std::all_of(psi.begin(), psi.end(), [](int x) { return x >= 0; })) {
      p.psi = psi;
      p.max_cone = c;
      break;
    }
  }
  if (p.max_cone < 0) throw Error(ErrorKind::OutsideSupport, "point " + to_string(k) + " is not in the support");
  for (int i = 0; i < f.num_rays(); ++i)
    if (p.psi[i] > 0) p.min_cone.push_back(i);
  p.norm = sum(p.psi);
  p.beta = sub(p.psi, f.splitting(k));
  return p;
}

inline CurveClass make_class(const Fan& f, IntVec d) {
  CurveClass c;
  c.theta_degree = f.theta_degree(d);
  c.d = std::move(d);
  return c;
}

inline CurveClass pairing_d(const Fan& f, const IntVec& k, const IntVec& l) {
  IntVec d = sub(add(f.psi(k), f.psi(l)), f.psi(add(k, l)));
  return make_class(f, d);
}

// Lattice points with |k| <= cap, sorted by (|k|, lexicographic k).
inline std::vector<PointData> enumerate_points(const Fan& f, int cap) {
  std::set<std::pair<int, IntVec>> found;
  for (const auto& c : f.cones()) {
    IntVec a(c.size(), 0);
    // Odometer over exponent vectors on the cone with total <= cap.
    for (;;) {
      IntVec psi(f.num_rays(), 0);
      for (size_t t = 0; t < c.size(); ++t) psi[c[t]] = a[t];
      found.insert({sum(a), f.point_of(psi)});
      size_t t = 0;
      while (t < a.size()) {
        ++a[t];
        if (sum(a) <= cap) break;
        a[t] = 0;
        ++t;
      }
      if (t == a.size()) break;
    }
  }
  std::vector<PointData> out;
  for (const auto& [n, k] : found) out.push_back(point_data(f, k));
  return out;
}

// Union test: d lies in some C_I (d_i >= 0 for i off I).
inline bool in_some_cone_class(const Fan& f, const IntVec& d) {
  for (const auto& c : f.cones()) {
    bool ok = true;
    for (int i = 0; i < f.num_rays() && ok; ++i)
      if (!std::binary_search(c.begin(), c.end(), i) && d[i] < 0) ok = false;
    if (ok) return true;
  }
  return false;
}

// Membership in the real cone spanned by the Mori generators (the sum of the
// C_I), which is the effective cone.
inline bool is_effective(const Fan& f, const IntVec& d) {
  const auto& gens = f.mori_generators();
  const int m = f.num_rays();
  if (is_zero(d)) return true;
  if (gens.empty()) return false;
  RatMatrix A;
  std::vector<Rational> rhs;
  for (int i = 0; i < m; ++i) {
    std::vector<Rational> row(gens.size());
    for (size_t g = 0; g < gens.size(); ++g) row[g] = gens[g][i];
    A.push_back(row);
    rhs.push_back(d[i]);
    for (auto& v : row) v = -v;
    A.push_back(row);
    rhs.push_back(-d[i]);
  }
  return solve_lp(A, rhs, std::vector<Rational>(gens.size())).status == LPResult::Optimal;
}

// All effective classes with theta-degree <= cap, sorted by (theta-degree, d).
inline std::vector<CurveClass> enumerate_effective(const Fan& f, int cap) {
  const int m = f.num_rays();
  const auto& gens = f.mori_generators();
  std::vector<CurveClass> out;
  out.push_back(make_class(f, IntVec(m, 0)));
  if (gens.empty() || cap <= 0) return out;
  for (const auto& g : gens)
    if (f.theta_degree(g) <= 0)
      throw Error(ErrorKind::PolarizationUnbounded, "theta vanishes on the generator " + to_string(g));

  // L is parametrized by the coordinates off the splitting cone.
  const auto& s = f.cone(f.splitting_cone());
  std::vector<int> free_idx;
  for (int i = 0; i < m; ++i)
    if (!std::binary_search(s.begin(), s.end(), i)) free_idx.push_back(i);

  // Box bounds from the LP over the cone {sum a_g g : a >= 0, theta.d <= cap}.
  const size_t ng = gens.size();
  RatMatrix A(1, std::vector<Rational>(ng));
  for (size_t g = 0; g < ng; ++g) A[0][g] = f.theta_degree(gens[g]);
  std::vector<Rational> rhs{Rational(cap)};
  std::vector<int> lo, hi;
  for (int i : free_idx) {
    std::vector<Rational> obj(ng);
    for (size_t g = 0; g < ng; ++g) obj[g] = gens[g][i];
    auto up = solve_lp(A, rhs, obj);
    for (auto& v : obj) v = -v;
    auto down = solve_lp(A, rhs, obj);
    if (up.status != LPResult::Optimal || down.status != LPResult::Optimal)
      throw Error(ErrorKind::PolarizationUnbounded, "theta-degree bound leaves the box unbounded");
    mpz_class h, l;
    mpz_fdiv_q(h.get_mpz_t(), up.value.get_num_mpz_t(), up.value.get_den_mpz_t());
    Rational neg = -down.value;
    mpz_cdiv_q(l.get_mpz_t(), neg.get_num_mpz_t(), neg.get_den_mpz_t());
    hi.push_back(static_cast<int>(h.get_si()));
    lo.push_back(static_cast<int>(l.get_si()));
  }

  std::set<std::pair<int, IntVec>> found;
  IntVec cur(lo);
  for (;;) {
    IntVec d(m, 0);
    for (size_t t = 0; t < free_idx.size(); ++t) d[free_idx[t]] = cur[t];
    // Complete d on the splitting cone so that sum d_i b_i = 0.
    IntVec rest(f.rank(), 0);
    for (int i : free_idx)
      for (int a = 0; a < f.rank(); ++a) rest[a] -= d[i] * f.ray(i)[a];
    IntVec coords = f.cone_coordinates(f.splitting_cone(), rest);
    for (int i : s) d[i] = coords[i];
    int deg = f.theta_degree(d);
    if (!is_zero(d) && deg <= cap && deg > 0 && is_effective(f, d)) found.insert({deg, d});
    size_t t = 0;
    while (t < cur.size()) {
      if (++cur[t] <= hi[t]) break;
      cur[t] = lo[t];
      ++t;
    }
    if (t == cur.size()) break;
  }
  for (const auto& [deg, d] : found) out.push_back(make_class(f, d));
  return out;
}

// Row i is u_i restricted to the fixed point of cone c, as a linear form in
// lambda: the dual basis vector for i in the cone, zero otherwise.
inline std::vector<IntVec> fixed_point_weights(const Fan& f, int c) {
  std::vector<IntVec> w(f.num_rays(), IntVec(f.rank(), 0));
  const auto& s = f.cone(c);
  for (size_t t = 0; t < s.size(); ++t) w[s[t]] = f.dual_basis(c)[t];
  return w;
}

}  // namespace toricmirror
