#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "toricmirror/mirror.hpp"

namespace toricmirror {

struct CheckEntry {
  std::string property;
  std::string fan;
  int order = 0;
  bool pass = true;
  std::string witness;
};
using Report = std::vector<CheckEntry>;

inline bool all_pass(const Report& r) {
  for (const auto& e : r)
    if (!e.pass) return false;
  return true;
}

inline std::string describe_mono(const MirrorEngine& e, int id) {
  return "Q" + to_string(e.monos().d(id)) + " y" + to_string(e.monos().l(id));
}

// One entry per (property, order); a failing entry keeps the first witness.
class ReportBuilder {
 public:
  explicit ReportBuilder(std::string fan) : fan_(std::move(fan)) {}

  void record(const std::string& property, int order, bool pass, const std::string& witness = "") {
    auto [it, fresh] = entries_.try_emplace({property, order}, CheckEntry{property, fan_, order, true, ""});
    (void)fresh;
    if (!pass && it->second.pass) {
      it->second.pass = false;
      it->second.witness = witness;
    }
  }

  // Exact comparison of two class series, mono by mono, for monos with
  // G-degree <= max_gdeg.
  void compare(const MirrorEngine& e, const std::string& property, const MSeries& a, const MSeries& b, int max_gdeg,
               const std::string& context = "") {
    const auto& mt = e.monos();
    for (int id = 0; id < mt.size(); ++id) {
      if (mt.gdeg(id) > max_gdeg) continue;
      ClassVec diff = a[id];
      diff -= b[id];
      e.truncate(diff);
      std::string w;
      if (!is_zero(diff)) {
        for (int c = 0; c < e.rank(); ++c)
          if (!diff[c].is_zero()) {
            w = context + (context.empty() ? "" : ": ") + describe_mono(e, id) + " e" +
                to_string(e.module().basis_points()[c]) + " differs by " + diff[c].to_string(e.fan().rank());
            break;
          }
      }
      record(property, mt.order(id), w.empty(), w);
    }
  }

  void compare_scalar(const MirrorEngine& e, const std::string& property, const MScalar& a, const MScalar& b,
                      int max_gdeg, const std::string& context = "") {
    const auto& mt = e.monos();
    for (int id = 0; id < mt.size(); ++id) {
      if (mt.gdeg(id) > max_gdeg) continue;
      Poly diff = a[id] - b[id];
      std::string w;
      if (!diff.is_zero())
        w = context + (context.empty() ? "" : ": ") + describe_mono(e, id) + " differs by " +
            diff.to_string(e.fan().rank());
      record(property, mt.order(id), w.empty(), w);
    }
  }

  void merge(const Report& r) {
    for (const auto& x : r) record(x.property, x.order, x.pass, x.witness);
  }

  Report build() const {
    Report out;
    for (const auto& [key, entry] : entries_) out.push_back(entry);
    return out;
  }

 private:
  std::string fan_;
  std::map<std::pair<std::string, int>, CheckEntry> entries_;
};

}  // namespace toricmirror
