// Command-line front end: reads a fan file, builds the mirror data under the
// requested caps and writes canonical JSON or an aligned table.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toricmirror/json_io.hpp"

#ifndef TORICMIRROR_EXAMPLES_DIR
#define TORICMIRROR_EXAMPLES_DIR "examples"
#endif

namespace fs = std::filesystem;
using namespace toricmirror;

namespace {

struct RunConfig {
  std::string command;
  std::string fan;
  TruncationPolicy policy{3, 2, 3, 2, 10, -1};
  std::string out;
  std::string format;
  std::string route = "both";
  std::string section;
  std::string suite = "all";
  std::string a, b;
  int dmax = 3;
  unsigned seed = 7;
};

// A path, or a short name such as "p2" looked up as <name>.fan.json in the
// working directory's examples/ and then in the installed examples.
std::string resolve_fan(const std::string& arg) {
  if (arg.empty()) throw Error(ErrorKind::MalformedInput, "no fan given (use --fan)");
  if (fs::exists(arg)) return arg;
  for (const auto& dir : {fs::path("examples"), fs::path(TORICMIRROR_EXAMPLES_DIR)}) {
    const fs::path p = dir / (arg + ".fan.json");
    if (fs::exists(p)) return p.string();
  }
  throw Error(ErrorKind::MalformedInput, "no fan file '" + arg + "'");
}

std::string fan_label(const std::string& path) {
  std::string name = fs::path(path).filename().string();
  const std::string suffix = ".fan.json";
  if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
    name.resize(name.size() - suffix.size());
  return name;
}

// ---- aligned tables ---------------------------------------------------------

std::string cell(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void print_rows(std::ostream& os, const std::vector<std::vector<std::string>>& rows, const std::string& indent) {
  std::vector<size_t> width;
  for (const auto& r : rows)
    for (size_t c = 0; c < r.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], r[c].size());
    }
  for (const auto& r : rows) {
    std::string line = indent;
    for (size_t c = 0; c < r.size(); ++c) {
      line += r[c];
      if (c + 1 < r.size()) line += std::string(width[c] - r[c].size() + 2, ' ');
    }
    os << line << "\n";
  }
}

bool is_record_list(const Json& v) {
  if (!v.is_array() || v.empty()) return false;
  for (const auto& x : v) {
    if (!x.is_object()) return false;
    for (const auto& [k, y] : x.items())
      if (y.is_object() || (y.is_array() && !y.empty() && y[0].is_object())) return false;
  }
  return true;
}

void render(std::ostream& os, const Json& j, const std::string& title, int depth) {
  const std::string indent(2 * depth, ' ');
  if (is_record_list(j)) {
    os << indent << title << " (" << j.size() << ")\n";
    std::vector<std::string> cols;
    for (const auto& x : j)
      for (const auto& [k, y] : x.items())
        if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
    std::vector<std::vector<std::string>> rows{cols};
    for (const auto& x : j) {
      std::vector<std::string> r;
      for (const auto& c : cols) r.push_back(x.contains(c) ? cell(x[c]) : "");
      rows.push_back(r);
    }
    print_rows(os, rows, indent + "  ");
    return;
  }
  if (j.is_object()) {
    if (!title.empty()) os << indent << title << "\n";
    std::vector<std::vector<std::string>> scalars;
    for (const auto& [k, v] : j.items())
      if (!v.is_object() && !is_record_list(v) && !(v.is_array() && !v.empty() && v[0].is_object()))
        scalars.push_back({k, cell(v)});
    print_rows(os, scalars, indent + (title.empty() ? "" : "  "));
    for (const auto& [k, v] : j.items())
      if (v.is_object() || is_record_list(v) || (v.is_array() && !v.empty() && v[0].is_object()))
        render(os, v, k, depth + (title.empty() ? 0 : 1));
    return;
  }
  if (j.is_array()) {
    os << indent << title << " (" << j.size() << ")\n";
    int i = 0;
    for (const auto& x : j) render(os, x, "[" + std::to_string(++i) + "]", depth + 1);
    return;
  }
  os << indent << title << "  " << cell(j) << "\n";
}

// ---- command bodies -----------------------------------------------------------

Json series_records(const MirrorEngine& e, const MSeries& v) { return series_artifact(e.to_series(v)); }

// "1" or "0" is the unit, "bN" the N-th ray class, "k1,k2" (optionally in
// parentheses) the class phi_k.
MSeries parse_element(const MirrorEngine& e, const std::string& s) {
  const Fan& f = e.fan();
  const auto& mod = e.module();
  if (s == "0" || s == "1" || s == "unit") return e.constant_series(mod.unit());
  static const std::regex ray(R"(b([0-9]+))");
  std::smatch m;
  if (std::regex_match(s, m, ray)) {
    const int i = std::stoi(m[1]);
    if (i < 1 || i > f.num_rays()) throw Error(ErrorKind::MalformedInput, "no ray " + s);
    return e.constant_series(mod.phi(f.ray(i - 1)));
  }
  std::string t = s;
  t.erase(std::remove_if(t.begin(), t.end(), [](char c) { return c == '(' || c == ')' || c == ' '; }), t.end());
  IntVec k;
  std::stringstream ss(t);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      size_t used = 0;
      k.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorKind::MalformedInput, "cannot read element '" + s + "'");
    }
  }
  if (static_cast<int>(k.size()) != f.rank()) throw Error(ErrorKind::MalformedInput, "element '" + s + "' has wrong length");
  if (!f.psi_if_inside(k)) throw Error(ErrorKind::OutsideSupport, "point " + to_string(k));
  const int n = point_data(f, k).norm;
  if (n > e.policy().kcoh) throw Error(ErrorKind::IncompatibleTruncation, "|" + s + "| exceeds Kcoh");
  return e.constant_series(mod.phi(k));
}

Json run(const RunConfig& cfg, bool& failed) {
  const std::string path = resolve_fan(cfg.fan);
  const std::string label = fan_label(path);

  if (cfg.command == "oracle-p2") {
    const Fan f = read_fan_file(path);
    const TruncationPolicy pol = wdvv_policy(cfg.dmax);
    MirrorEngine e(f, pol, std::vector<IntVec>{IntVec{1, 1}});
    WdvvComparison c = wdvv_compare(e, cfg.dmax);
    Json rows = Json::array();
    for (int d = 1; d <= cfg.dmax; ++d)
      rows.push_back(Json{{"d", d}, {"oracle", c.oracle[d].get_str()}, {"engine", to_json(c.engine[d])},
                          {"match", c.engine[d] == Rational(c.oracle[d])}});
    failed = !c.match;
    return Json{{"invariants", rows}, {"match", c.match}, {"policy", to_json(pol)}};
  }

  const Fan f = read_fan_file(path);
  Json head{{"fan", Json{{"name", label}, {"hash", fan_hash(f)}}}};
  if (cfg.command == "validate") {
    head["summary"] = fan_summary(f);
    return head;
  }
  head["policy"] = to_json(cfg.policy);
  cfg.policy.validate();

  if (cfg.command == "enumerate") {
    Json pts = Json::array();
    for (const auto& p : enumerate_points(f, cfg.policy.kcoh))
      pts.push_back(Json{{"k", to_json(p.k)}, {"psi", to_json(p.psi)}, {"norm", p.norm}, {"beta", to_json(p.beta)}});
    Json eff = Json::array();
    for (const auto& c : enumerate_effective(f, cfg.policy.qcap))
      eff.push_back(Json{{"d", to_json(c.d)}, {"theta_degree", c.theta_degree}});
    head["points"] = pts;
    head["effective_classes"] = eff;
    return head;
  }

  MirrorEngine e(f, cfg.policy);
  head["variables"] = variables_json(e);

  if (cfg.command == "ifunction") {
    head["I"] = series_records(e, e.I());
  } else if (cfg.command == "mirror-map") {
    const HSeries tau = e.to_series(e.tau());
    head["tau"] = series_artifact(tau);
    head["upsilon"] = series_records(e, e.upsilon());
    Json inv = Json::object();
    for (const auto& [j, s] : e.inverse_mirror_map()) inv[e.vars()[j].name()] = series_artifact(s);
    head["inverse_map"] = inv;
    head["tau_with_divisor_variables"] = to_json(e.restore_divisor_variables(tau, true));
  } else if (cfg.command == "seidel") {
    Json out = Json::array();
    for (const auto& k : e.points_up_to(cfg.policy.kcoh))
      out.push_back(Json{{"k", to_json(k)}, {"series", series_records(e, e.seidel(k))}});
    head["seidel"] = out;
  } else if (cfg.command == "qproduct") {
    head["a"] = cfg.a;
    head["b"] = cfg.b;
    head["product"] = series_records(e, e.qproduct(parse_element(e, cfg.a), parse_element(e, cfg.b)));
  } else if (cfg.command == "jacobi") {
    Json out = Json::array();
    for (const auto& j : jacobi_structure_constants(e)) {
      const bool match = j.jacobi.terms() == j.quantum.terms();
      failed = failed || !match;
      out.push_back(Json{{"k", to_json(j.k)}, {"l", to_json(j.l)}, {"jacobi", series_artifact(j.jacobi)},
                         {"quantum", series_artifact(j.quantum)}, {"match", match}});
    }
    head["structure_constants"] = out;
  } else if (cfg.command == "primitive-form") {
    PrimitiveFormResult r = primitive_form(e, cfg.route);
    head["route"] = cfg.route;
    head["agree"] = r.agree;
    if (r.a) {
      Json c = Json::array();
      for (const auto& [k, s] : r.a->c) c.push_back(Json{{"k", to_json(k)}, {"series", series_artifact(e.scalar_to_series(s))}});
      head["route_a"] = Json{{"coefficients", c}};
    }
    if (r.b) {
      Json y = Json::array();
      for (const auto& [kn, s] : r.b->y)
        y.push_back(Json{{"k", to_json(kn.first)}, {"n", kn.second}, {"series", series_artifact(e.scalar_to_series(s))}});
      head["route_b"] = Json{{"deformation", y}, {"tau", series_records(e, r.b->tau)}};
    }
  } else if (cfg.command == "noneq") {
    std::vector<CohClass> section;
    if (!cfg.section.empty())
      section = section_from_json(parse_json_text(read_text_file(cfg.section), cfg.section), e.module().cohomology(), f);
    NoneqResult r = noneq_restrict(e, section);
    Json basis = Json::array(), sec = Json::array(), pot = Json::array(), prods = Json::array();
    for (size_t i = 0; i < r.flat.size(); ++i) {
      basis.push_back(Json{{"index", i + 1}, {"degree", r.flat[i].first}, {"representative", to_json(r.flat[i].second)}});
      sec.push_back(to_json(r.section[i]));
    }
    for (const auto& t : r.potential)
      pot.push_back(Json{{"x", to_json(t.k)}, {"q", to_json(t.q)}, {"coeff", t.coeff}});
    for (const auto& p : r.products) {
      Json c = Json::array();
      for (const auto& v : p.via_module) c.push_back(to_json(v));
      prods.push_back(Json{{"a", p.a + 1}, {"b", p.b + 1}, {"d", to_json(p.d)}, {"coords", c},
                           {"agree", p.via_phi == p.via_module}});
    }
    failed = !r.products_agree;
    head["basis"] = basis;
    head["section"] = sec;
    head["potential"] = Json{{"terms", pot}, {"text", potential_string(r.potential)}};
    head["unfolding"] = Json{{"rank", r.unfolding_rank}, {"dimension", r.dimension}};
    head["products"] = prods;
  } else if (cfg.command == "check") {
    Report rep = run_property_suite(e, label, SuiteSelection::parse(cfg.suite), cfg.seed);
    failed = !all_pass(rep);
    head["report"] = to_json(rep);
    head["all_pass"] = !failed;
  } else {
    throw Error(ErrorKind::MalformedInput, "unknown command " + cfg.command);
  }
  return head;
}

void emit_error(const std::string& kind, const std::string& detail) {
  std::cerr << Json{{"error", kind}, {"detail", detail}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mirror data for smooth semiprojective toric varieties"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  app.add_option("--fan", cfg.fan, "fan file, or a short name such as p2");
  app.add_option("--kcoh", cfg.policy.kcoh, "max |k| of cohomology keys")->capture_default_str();
  app.add_option("--kvar", cfg.policy.kvar, "max |k| of deformation variables")->capture_default_str();
  app.add_option("--qcap", cfg.policy.qcap, "max theta-degree of Novikov exponents")->capture_default_str();
  app.add_option("--gcap", cfg.policy.gcap, "max total degree in deformation variables")->capture_default_str();
  app.add_option("--zneg", cfg.policy.zneg, "max depth of the z^-1 expansion")->capture_default_str();
  app.add_option("--zpos", cfg.policy.zpos, "max positive z power (-1: derived)")->capture_default_str();
  app.add_option("--out", cfg.out, "also write the canonical JSON artifact here");
  app.add_option("--format", cfg.format, "json or table")->check(CLI::IsMember({"json", "table"}));
  app.add_option("--seed", cfg.seed, "RNG seed for sampled checks")->capture_default_str();

  auto* validate = app.add_subcommand("validate", "validate a fan file and print its summary");
  validate->add_option("path", cfg.fan, "fan file");
  app.add_subcommand("enumerate", "lattice points and effective classes within caps");
  app.add_subcommand("ifunction", "the extended I-function on the slice");
  app.add_subcommand("mirror-map", "mirror map, Upsilon and the inverse mirror map");
  app.add_subcommand("seidel", "Seidel elements S_k for |k| <= Kcoh");
  auto* qp = app.add_subcommand("qproduct", "quantum product of two classes (1, bN or a point k1,k2,...)");
  qp->add_option("A", cfg.a)->required();
  qp->add_option("B", cfg.b)->required();
  app.add_subcommand("jacobi", "Jacobi-ring structure constants against quantum ones");
  auto* pf = app.add_subcommand("primitive-form", "primitive form by route a, b or both");
  pf->add_option("--route", cfg.route)->check(CLI::IsMember({"a", "b", "both"}))->capture_default_str();
  auto* nq = app.add_subcommand("noneq", "non-equivariant restriction along a section");
  nq->add_option("--section", cfg.section, "section file");
  auto* ck = app.add_subcommand("check", "run the property suite");
  ck->add_option("--suite", cfg.suite, "comma-separated checks or all")->capture_default_str();
  auto* op = app.add_subcommand("oracle-p2", "point invariants of P^2 against the Kontsevich recursion");
  op->add_option("--dmax", cfg.dmax)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("UsageError", e.what());
    return 2;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  if (cfg.command == "oracle-p2" && cfg.fan.empty()) cfg.fan = "p2";
  // Summaries read best as tables, series as JSON.
  const std::string format =
      !cfg.format.empty() ? cfg.format : (cfg.command == "validate" || cfg.command == "check" ? "table" : "json");

  try {
    bool failed = false;
    Json artifact = run(cfg, failed);
    artifact["command"] = cfg.command;
    if (!cfg.out.empty()) {
      std::ofstream out(cfg.out, std::ios::binary);
      if (!out) throw Error(ErrorKind::MalformedInput, "cannot write " + cfg.out);
      out << canonical(artifact);
    }
    if (format == "json")
      std::cout << canonical(artifact);
    else
      render(std::cout, artifact, "", 0);
    if (failed) {
      const bool oracle = cfg.command == "oracle-p2";
      emit_error(oracle ? "MismatchedInvariant" : "IdentityViolation",
                 oracle ? "engine invariants differ from the recursion" : cfg.command + " found a failing identity");
      return 1;
    }
  } catch (const Error& e) {
    emit_error(error_name(e.kind()), e.detail());
    return 1;
  } catch (const std::exception& e) {
    emit_error("InternalError", e.what());
    return 3;
  }
  return 0;
}
