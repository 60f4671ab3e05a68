// Acceptance driver: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Engines for the four example fans are built once at the suite caps and shared.

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "support.hpp"

using namespace toricmirror;
using namespace toricmirror::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fixed1(double x) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(1);
  s << x;
  return s.str();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

struct FanCase {
  std::string name;
  Fan fan;
  std::unique_ptr<MirrorEngine> engine;
  double build_seconds = 0;
};

// Fans must not move once an engine points at them, hence the stable storage.
std::vector<std::unique_ptr<FanCase>> g_cases;

FanCase& fan_case(const std::string& name) {
  for (auto& c : g_cases)
    if (c->name == name) return *c;
  throw std::logic_error("unknown fan " + name);
}

// A failing report makes the outcome fail with its first witness.
void require(Outcome& o, const std::string& fan, const Report& r) {
  if (r.empty()) o.fail(fan + ": empty report");
  if (!all_pass(r)) o.fail(fan + ": " + first_failure(r));
}

template <class F>
Outcome guarded(F body) {
  Outcome o;
  try {
    body(o);
  } catch (const Error& e) {
    o.fail(std::string(error_name(e.kind())) + ": " + e.what());
  } catch (const std::exception& e) {
    o.fail(std::string("exception: ") + e.what());
  }
  return o;
}

HSeries at_base(const HSeries& s) {
  return s.filter([](const SeriesKey& k) { return sum(k.g) == 0; });
}

HSeries novikov_unit(const MirrorEngine& e, const IntVec& d) {
  HSeries out(e.space());
  out.add_term({e.module().cohomology().key(IntVec(e.fan().rank(), 0)), 0, d, zero_l(e)}, 1);
  return out;
}

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  const std::string cmd = "cd '" + source_path("") + "' && '" + std::string(TORICMIRROR_CLI) + "' " + args;
  CliRun r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const std::vector<std::string> kFans{"p1", "p2", "c2", "f1"};

Outcome birkhoff_residual() {
  return guarded([](Outcome& o) {
    double worst = 0;
    for (const auto& name : kFans) {
      auto c = std::make_unique<FanCase>(FanCase{name, example_fan(name), nullptr, 0});
      const auto t0 = Clock::now();
      c->engine = std::make_unique<MirrorEngine>(c->fan, suite_caps());
      require(o, name, check_residual(*c->engine, name));
      c->build_seconds = seconds_since(t0);
      worst = std::max(worst, c->build_seconds);
      if (c->build_seconds > 300) o.fail(name + " took " + fixed1(c->build_seconds) + " s");
      g_cases.push_back(std::move(c));
    }
    if (o.pass) o.detail = "residual vanishes on p1 p2 c2 f1, slowest build " + fixed1(worst) + " s";
  });
}

Outcome flow() {
  return guarded([](Outcome& o) {
    for (const auto& name : kFans) require(o, name, check_flow(*fan_case(name).engine, name));
    if (o.pass) o.detail = "tau and Upsilon flows hold on p1 p2 c2 f1";
  });
}

Outcome linear_and_homogeneity() {
  return guarded([](Outcome& o) {
    for (const auto& name : kFans) {
      const MirrorEngine& e = *fan_case(name).engine;
      require(o, name, check_linear_relation(e, name));
      require(o, name, check_homogeneity(e, name));
    }
    if (o.pass) o.detail = "linear relations and weights hold on p1 p2 c2 f1";
  });
}

Outcome localization() {
  return guarded([](Outcome& o) {
    for (const auto& name : kFans) require(o, name, localization_check(*fan_case(name).engine, name, 2));
    if (o.pass) o.detail = "fixed-point identity holds for |k| <= 2 on p1 p2 c2 f1";
  });
}

Outcome theta_and_jacobi() {
  return guarded([](Outcome& o) {
    for (const auto& name : kFans) {
      const MirrorEngine& e = *fan_case(name).engine;
      require(o, name, check_theta(e, name));
      require(o, name, check_jacobi(e, name));
    }
    if (o.pass) o.detail = "Theta and Jacobi relations hold on p1 p2 c2 f1";
  });
}

Outcome quantum_products() {
  return guarded([](Outcome& o) {
    {
      FanCase& c = fan_case("p1");
      const MirrorEngine& e = *c.engine;
      const HSeries prod =
          at_base(e.to_series(e.qproduct(e.from_class(phi_class(c.fan, {1})), e.from_class(phi_class(c.fan, {-1})))));
      if (prod != novikov_unit(e, {1, 1})) o.fail("p1: b1 * b2 at the base is not Q");
    }
    {
      FanCase& c = fan_case("p2");
      const MirrorEngine& e = *c.engine;
      MSeries x = e.qproduct(e.from_class(phi_class(c.fan, {0, 1})), e.from_class(phi_class(c.fan, {-1, -1})));
      x = e.qproduct(e.from_class(phi_class(c.fan, {1, 0})), x);
      if (at_base(e.to_series(x)) != novikov_unit(e, {1, 1, 1})) o.fail("p2: b1 * b2 * b3 at the base is not Q");
    }
    int pairs = 0;
    {
      FanCase& c = fan_case("c2");
      const MirrorEngine& e = *c.engine;
      const Cohomology& coh = e.module().cohomology();
      const int kcoh = e.policy().kcoh;
      for (const auto& k : e.points_up_to(kcoh))
        for (const auto& l : e.points_up_to(kcoh)) {
          if (point_data(c.fan, k).norm + point_data(c.fan, l).norm > kcoh) continue;
          ++pairs;
          const HSeries prod = e.to_series(e.qproduct(e.from_class(phi_class(c.fan, k)), e.from_class(phi_class(c.fan, l))));
          const auto kl = coh.phi_product(k, l);
          const HSeries expected = kl ? e.to_series(e.from_class(phi_class(c.fan, *kl))) : HSeries(e.space());
          if (prod != expected) o.fail("c2: " + to_string(k) + " * " + to_string(l) + " is not classical");
        }
    }
    if (o.pass)
      o.detail = "p1 b1*b2 = Q, p2 b1*b2*b3 = Q, c2 classical on " + std::to_string(pairs) + " pairs";
  });
}

Outcome routes() {
  return guarded([](Outcome& o) {
    for (const auto& name : kFans) {
      const MirrorEngine& e = *fan_case(name).engine;
      const PrimitiveFormResult r = primitive_form(e, "both");
      if (!r.agree) o.fail(name + ": " + r.disagreement);
      require(o, name, check_routes(e, name, *r.a, *r.b));
    }
    if (o.pass) o.detail = "both primitive-form routes agree and route B reproduces tau on p1 p2 c2 f1";
  });
}

Outcome wdvv() {
  return guarded([](Outcome& o) {
    const auto t0 = Clock::now();
    Fan f = example_fan("p2");
    MirrorEngine e(f, wdvv_policy(3), std::vector<IntVec>{{1, 1}});
    const WdvvComparison c = wdvv_compare(e, 3);
    const double secs = seconds_since(t0);
    std::string values;
    for (int d = 1; d <= 3; ++d) values += (d > 1 ? " " : "") + c.engine[d].get_str();
    if (!c.match) o.fail("engine gives " + values);
    if (secs > 900) o.fail("took " + fixed1(secs) + " s");
    if (o.pass) o.detail = "N1..N3 = " + values + " in " + fixed1(secs) + " s";
  });
}

Outcome determinism_and_controls() {
  return guarded([](Outcome& o) {
    // Two CLI processes must write identical bytes.
    const std::vector<std::string> commands{"--fan p2 --format json check", "--fan f1 mirror-map",
                                            "--fan c2 primitive-form"};
    for (const auto& args : commands) {
      const CliRun a = run_cli(args), b = run_cli(args);
      if (a.code != 0) o.fail("cli '" + args + "' exited " + std::to_string(a.code));
      if (a.out.empty() || a.out != b.out) o.fail("cli '" + args + "' is not reproducible");
    }
    // An independently built engine must agree term for term.
    {
      FanCase& c = fan_case("p2");
      MirrorEngine again(c.fan, suite_caps());
      const MirrorEngine& e = *c.engine;
      if (e.to_series(e.tau()) != again.to_series(again.tau())) o.fail("p2: tau differs between builds");
      if (e.to_series(e.upsilon()) != again.to_series(again.upsilon())) o.fail("p2: Upsilon differs between builds");
    }
    int applicable = 0;
    for (const char* name : {"p1", "c2"}) {
      for (const auto& c : negative_controls(*fan_case(name).engine, name)) {
        if (!c.applicable) continue;
        ++applicable;
        if (!c.detected) o.fail(std::string(name) + ": perturbed " + c.property + " went unnoticed");
      }
    }
    {
      Fan f = example_fan("p2");
      MirrorEngine e(f, wdvv_policy(2), std::vector<IntVec>{{1, 1}});
      if (wdvv_compare(e, 2, {0, 1, 2}).match) o.fail("perturbed Kontsevich oracle was accepted");
    }
    if (o.pass)
      o.detail = "cli output and rebuilt engine are identical, " + std::to_string(applicable) +
                 " negative controls and the oracle perturbation all detected";
  });
}

}  // namespace

int main() {
  using Criterion = std::pair<const char*, Outcome (*)()>;
  const std::vector<Criterion> criteria{
      {"birkhoff residual at suite caps", birkhoff_residual},
      {"flow equations", flow},
      {"linear relations and homogeneity", linear_and_homogeneity},
      {"fixed-point localization", localization},
      {"Theta and Jacobi relations", theta_and_jacobi},
      {"quantum product examples", quantum_products},
      {"primitive form routes", routes},
      {"WDVV against Kontsevich", wdvv},
      {"determinism and negative controls", determinism_and_controls},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    const Outcome o = criteria[i].second();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): " << o.detail
              << " [" << fixed1(seconds_since(t0)) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
