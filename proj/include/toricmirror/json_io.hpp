#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "toricmirror/gauss_manin.hpp"
#include "toricmirror/verify.hpp"

namespace toricmirror {

// nlohmann::json keeps object keys in a std::map, so dump() is canonical:
// sorted keys, no whitespace variation. Rationals are written as strings.
using Json = nlohmann::json;

inline std::string canonical(const Json& j) { return j.dump(1, ' ') + "\n"; }

inline Json to_json(const Rational& q) { return q.get_str(); }

inline Rational rational_from_json(const Json& j) {
  try {
    if (j.is_number_integer()) return Rational(static_cast<long>(j.get<long long>()));
    if (j.is_string()) {
      Rational q(j.get<std::string>());
      q.canonicalize();
      return q;
    }
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::MalformedInput, "expected an exact rational, got " + j.dump());
}

// ---- fan files --------------------------------------------------------------

namespace detail {

inline int int_from_json(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw Error(ErrorKind::MalformedInput, where + " must be an integer, got " + j.dump());
  const long long v = j.get<long long>();
  if (v < -1000000 || v > 1000000) throw Error(ErrorKind::MalformedInput, where + " is out of range");
  return static_cast<int>(v);
}

inline IntVec intvec_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorKind::MalformedInput, where + " must be an array of integers");
  IntVec v;
  for (size_t i = 0; i < j.size(); ++i) v.push_back(int_from_json(j[i], where + "[" + std::to_string(i) + "]"));
  return v;
}

}  // namespace detail

// Keys: rank, rays, max_cones (1-based), optional splitting_cone (1-based
// index into max_cones) and polarization.
inline FanDescription fan_description_from_json(const Json& j) {
  using detail::int_from_json;
  using detail::intvec_from_json;
  if (!j.is_object()) throw Error(ErrorKind::MalformedInput, "fan file must hold a JSON object");
  for (const auto& [key, v] : j.items())
    if (key != "rank" && key != "rays" && key != "max_cones" && key != "splitting_cone" && key != "polarization" &&
        key != "name")
      throw Error(ErrorKind::MalformedInput, "unknown key '" + key + "'");
  for (const char* key : {"rank", "rays", "max_cones"})
    if (!j.contains(key)) throw Error(ErrorKind::MalformedInput, std::string("missing key '") + key + "'");
  FanDescription d;
  d.rank = int_from_json(j["rank"], "rank");
  if (!j["rays"].is_array()) throw Error(ErrorKind::MalformedInput, "rays must be an array");
  for (size_t i = 0; i < j["rays"].size(); ++i)
    d.rays.push_back(intvec_from_json(j["rays"][i], "rays[" + std::to_string(i) + "]"));
  if (!j["max_cones"].is_array()) throw Error(ErrorKind::MalformedInput, "max_cones must be an array");
  for (size_t c = 0; c < j["max_cones"].size(); ++c) {
    IntVec cone = intvec_from_json(j["max_cones"][c], "max_cones[" + std::to_string(c) + "]");
    for (int& i : cone) {
      if (i < 1 || i > static_cast<int>(d.rays.size()))
        throw Error(ErrorKind::MalformedInput, "max_cones[" + std::to_string(c) + "] refers to ray " +
                                                   std::to_string(i) + " (rays are numbered from 1)");
      --i;
    }
    d.max_cones.push_back(cone);
  }
  if (j.contains("splitting_cone")) {
    const int s = int_from_json(j["splitting_cone"], "splitting_cone");
    if (s < 1 || s > static_cast<int>(d.max_cones.size()))
      throw Error(ErrorKind::MalformedInput, "splitting_cone out of range");
    d.splitting_cone = s - 1;
  }
  if (j.contains("polarization")) d.polarization = intvec_from_json(j["polarization"], "polarization");
  return d;
}

inline Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::MalformedInput, what + " is not valid JSON: " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MalformedInput, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Fan read_fan_file(const std::string& path) {
  return load_fan(fan_description_from_json(parse_json_text(read_text_file(path), path)));
}

inline Json to_json(const IntVec& v) { return Json(std::vector<int>(v.begin(), v.end())); }

inline Json cones_to_json(const Fan& f) {
  Json out = Json::array();
  for (const auto& c : f.cones()) {
    Json cone = Json::array();
    for (int i : c) cone.push_back(i + 1);
    out.push_back(cone);
  }
  return out;
}

// 64-bit FNV-1a of the canonical fan description; identifies the fan in
// artifacts.
inline std::string fan_hash(const Fan& f) {
  Json j{{"rank", f.rank()}, {"rays", Json::array()}, {"max_cones", cones_to_json(f)}};
  for (const auto& r : f.rays()) j["rays"].push_back(to_json(r));
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream ss;
  ss << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << h;
  return ss.str();
}

inline Json fan_summary(const Fan& f) {
  Json j;
  j["rank"] = f.rank();
  j["rays"] = Json::array();
  for (const auto& r : f.rays()) j["rays"].push_back(to_json(r));
  j["max_cones"] = cones_to_json(f);
  j["splitting_cone"] = f.splitting_cone() + 1;
  j["polarization"] = to_json(f.polarization());
  j["polarization_from_input"] = f.theta_from_input();
  j["convexity_certificate"] = to_json(f.convexity_certificate());
  j["complete"] = f.is_complete();
  j["mori_generators"] = Json::array();
  for (const auto& g : f.mori_generators()) j["mori_generators"].push_back(to_json(g));
  j["hash"] = fan_hash(f);
  return j;
}

inline Json to_json(const TruncationPolicy& p) {
  return Json{{"kcoh", p.kcoh}, {"kvar", p.kvar}, {"qcap", p.qcap},
              {"gcap", p.gcap}, {"zneg", p.zneg}, {"zpos", p.effective_zpos()}};
}

// ---- series -----------------------------------------------------------------

// Records {k, zexp, d, gexp, num, den} in canonical key order.
inline Json to_json(const HSeries& s) {
  Json out = Json::array();
  for (const auto& [key, c] : s.terms())
    out.push_back(Json{{"k", to_json(key.k.k)},
                       {"zexp", key.z},
                       {"d", to_json(key.d)},
                       {"gexp", to_json(key.g)},
                       {"num", c.get_num().get_str()},
                       {"den", c.get_den().get_str()}});
  return out;
}

inline Json to_json(const Loss& l) {
  return Json{{"kcoh", l.kcoh}, {"qcap", l.qcap}, {"gcap", l.gcap}, {"zwindow", l.zwindow}};
}

// A series together with the count of terms its caps discarded.
inline Json series_artifact(const HSeries& s) { return Json{{"terms", to_json(s)}, {"truncated", to_json(s.loss())}}; }

inline Json variables_json(const MirrorEngine& e) {
  Json out = Json::array();
  for (const auto& v : e.vars()) out.push_back(Json{{"name", v.name()}, {"point", to_json(v.point)}, {"n", v.n}});
  return out;
}

inline Json to_json(const RestoredSeries& r) {
  Json terms = Json::array();
  for (const auto& t : r.terms)
    terms.push_back(Json{{"k", to_json(t.k.k)},
                         {"zexp", t.z},
                         {"d", to_json(t.d)},
                         {"ray_exp", to_json(t.ray_exp)},
                         {"gexp", to_json(t.g)},
                         {"num", t.c.get_num().get_str()},
                         {"den", t.c.get_den().get_str()}});
  Json logs = Json::array();
  for (const auto& [i, c] : r.logs) {
    Json cls = Json::array();
    for (const auto& [k, v] : c) cls.push_back(Json{{"k", to_json(k.k)}, {"c", to_json(v)}});
    logs.push_back(Json{{"ray", i + 1}, {"class", cls}});
  }
  return Json{{"terms", terms}, {"logs", logs}};
}

inline Json to_json(const CohClass& c) {
  Json out = Json::array();
  for (const auto& [k, v] : c) out.push_back(Json{{"k", to_json(k.k)}, {"c", to_json(v)}});
  return out;
}

// ---- reports ----------------------------------------------------------------

inline Json to_json(const Report& r) {
  Json out = Json::array();
  for (const auto& e : r)
    out.push_back(Json{{"property", e.property},
                       {"fan", e.fan},
                       {"order", e.order},
                       {"status", e.pass ? "pass" : "fail"},
                       {"witness", e.witness}});
  return out;
}

// ---- sections -----------------------------------------------------------------

// {"lifts": [[{"k": [..], "c": "1"}, ...], ...]}, one lift per
// non-equivariant basis element in degree order.
inline std::vector<CohClass> section_from_json(const Json& j, const Cohomology& coh, const Fan& f) {
  if (!j.is_object() || !j.contains("lifts") || !j["lifts"].is_array())
    throw Error(ErrorKind::MalformedInput, "section file must hold {\"lifts\": [...]}");
  std::vector<CohClass> out;
  for (const auto& lift : j["lifts"]) {
    if (!lift.is_array()) throw Error(ErrorKind::MalformedInput, "each lift must be an array of terms");
    CohClass c;
    for (const auto& t : lift) {
      if (!t.is_object() || !t.contains("k") || !t.contains("c"))
        throw Error(ErrorKind::MalformedInput, "lift terms are {\"k\": [...], \"c\": ...}");
      IntVec k = detail::intvec_from_json(t["k"], "k");
      if (static_cast<int>(k.size()) != f.rank()) throw Error(ErrorKind::MalformedInput, "lift point of wrong length");
      if (!f.psi_if_inside(k)) throw Error(ErrorKind::OutsideSupport, "lift point " + to_string(k));
      add_to(c, coh.key(k), rational_from_json(t["c"]));
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace toricmirror
