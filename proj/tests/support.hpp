#pragma once

#include <string>

#include "toricmirror/json_io.hpp"

namespace toricmirror::testing {

inline std::string source_path(const std::string& rel) { return std::string(TORICMIRROR_SOURCE_DIR) + "/" + rel; }

inline Fan example_fan(const std::string& name) { return read_fan_file(source_path("examples/" + name + ".fan.json")); }

inline Fan make_fan(int rank, std::vector<IntVec> rays, std::vector<std::vector<int>> cones) {
  FanDescription d;
  d.rank = rank;
  d.rays = std::move(rays);
  d.max_cones = std::move(cones);
  return load_fan(d);
}

inline TruncationPolicy caps(int kcoh, int kvar, int qcap, int gcap, int zneg = 10) {
  TruncationPolicy p;
  p.kcoh = kcoh;
  p.kvar = kvar;
  p.qcap = qcap;
  p.gcap = gcap;
  p.zneg = zneg;
  return p;
}

// The caps every fan is held to by the property suite.
inline TruncationPolicy suite_caps() { return caps(3, 2, 3, 2, 10); }

inline CohClass phi_class(const Fan& f, const IntVec& k, const Rational& c = 1) {
  return CohClass{{BasisKey{point_data(f, k).norm, k}, c}};
}

// A monomial in u_1..u_m written as the multi-index of powers, evaluated
// through the module.
inline ClassVec u_monomial(const EquivariantModule& mod, const IntVec& powers) {
  ClassVec v = mod.unit();
  for (size_t i = 0; i < powers.size(); ++i)
    for (int p = 0; p < powers[i]; ++p) v = mod.mul_u(static_cast<int>(i), v);
  return v;
}

inline int find_mono(const MirrorEngine& e, const IntVec& d, const IntVec& l) { return e.monos().find(d, l); }

inline IntVec zero_l(const MirrorEngine& e) { return IntVec(e.vars().size(), 0); }

inline IntVec var_unit(const MirrorEngine& e, const IntVec& point) {
  IntVec l(e.vars().size(), 0);
  for (size_t j = 0; j < e.vars().size(); ++j)
    if (e.vars()[j].point == point && e.vars()[j].n == 0) l[j] = 1;
  return l;
}

inline bool report_failed(const Report& r, const std::string& property) {
  for (const auto& x : r)
    if (x.property == property && !x.pass) return true;
  return false;
}

inline std::string first_failure(const Report& r) {
  for (const auto& x : r)
    if (!x.pass) return x.property + " order " + std::to_string(x.order) + ": " + x.witness;
  return "";
}

}  // namespace toricmirror::testing
