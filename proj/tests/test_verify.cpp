#include <gtest/gtest.h>

#include "support.hpp"

using namespace toricmirror;
using namespace toricmirror::testing;

namespace {

RatFunc form(const IntVec& f, int e = 1) { return RatFunc::constant(1).mul_form(f, e); }

}  // namespace

TEST(RatFunc, FormsAreNormalizedToPrimitivePositiveLead) {
  RatFunc a = RatFunc::constant(1).mul_form({-2, 4}, 1);
  RatFunc b = RatFunc::constant(-2).mul_form({1, -2}, 1);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.factors().begin()->first, (IntVec{1, -2}));
}

TEST(RatFunc, InverseFormsCancel) {
  RatFunc a = form({1, 1});
  a *= form({1, 1}, -1);
  EXPECT_EQ(a, RatFunc::constant(1));
}

TEST(RatFunc, ZeroFormKillsOrIsRejected) {
  EXPECT_TRUE(RatFunc::constant(3).mul_form({0, 0}, 2).is_zero());
  try {
    RatFunc::constant(3).mul_form({0, 0}, -1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IdentityViolation);
  }
}

TEST(RatFunc, ExpandsToNumeratorAndDenominator) {
  RatFunc a = RatFunc::constant(2);
  a.mul_form({1, 0}, 1).mul_form({0, 1}, -1);
  auto [num, den] = a.expand();
  EXPECT_EQ(num, Poly::lambda(0, 1) * Rational(2));
  EXPECT_EQ(den, Poly::z_power(1));
}

TEST(Localization, ProjectiveLineRayAtFirstFixedPoint) {
  Fan f = example_fan("p1");
  LocalizationOracle orc(f, {});
  RatFunc expected = form({1, 0});
  expected *= form({0, 1});
  EXPECT_EQ(orc.lhs(0, {1}, {0, 0}, {}), expected);
  EXPECT_EQ(orc.rhs(0, {1}, {0, 0}, {}), expected);
  EXPECT_EQ(orc.delta(0, {1}), form({1, 0}));
}

TEST(Localization, UnitDirectionReproducesI) {
  Fan f = example_fan("p2");
  LocalizationOracle orc(f, {{0, 0}});
  for (int x = 0; x < 3; ++x) {
    EXPECT_EQ(orc.delta(x, {0, 0}), RatFunc::constant(1));
    for (const IntVec& d : {IntVec{0, 0, 0}, IntVec{1, 1, 1}})
      for (int g = 0; g < 3; ++g) {
        EXPECT_EQ(orc.lhs(x, {0, 0}, d, {g}), orc.term(x, d, {g}));
        EXPECT_EQ(orc.rhs(x, {0, 0}, d, {g}), orc.term(x, d, {g}));
      }
  }
}

TEST(Localization, ProjectivePlaneThirdRayAtLowOrder) {
  Fan f = example_fan("p2");
  MirrorEngine e(f, caps(2, 0, 3, 0), std::vector<IntVec>{});
  const Report r = localization_check(e, "p2");
  EXPECT_FALSE(r.empty());
  EXPECT_TRUE(all_pass(r)) << first_failure(r);
}

TEST(Localization, HoldsOnEveryExampleFan) {
  for (const char* name : {"p1", "p2", "c2", "f1"}) {
    Fan f = example_fan(name);
    MirrorEngine e(f, caps(3, 2, 2, 2));
    const Report r = localization_check(e, name);
    EXPECT_TRUE(all_pass(r)) << first_failure(r);
  }
}

TEST(Localization, PerturbedDeltaIsCaught) {
  Fan f = example_fan("p1");
  MirrorEngine e(f, caps(2, 1, 2, 1));
  EXPECT_TRUE(report_failed(localization_check(e, "p1", 2, true), "localization_identity"));
}

TEST(Kontsevich, RecursionValues) {
  auto N = kontsevich_numbers(5);
  EXPECT_EQ(N[1], 1);
  EXPECT_EQ(N[2], 1);
  EXPECT_EQ(N[3], 12);
  EXPECT_EQ(N[4], 620);
  EXPECT_EQ(N[5], 87304);
}

TEST(Kontsevich, EngineMatchesRecursionToDegreeThree) {
  Fan f = example_fan("p2");
  MirrorEngine e(f, wdvv_policy(3), std::vector<IntVec>{{1, 1}});
  const WdvvComparison c = wdvv_compare(e, 3);
  EXPECT_TRUE(c.match);
  EXPECT_EQ(c.engine[1], 1);
  EXPECT_EQ(c.engine[2], 1);
  EXPECT_EQ(c.engine[3], 12);
}

TEST(Kontsevich, WrongOracleIsReportedAsMismatch) {
  Fan f = example_fan("p2");
  MirrorEngine e(f, wdvv_policy(2), std::vector<IntVec>{{1, 1}});
  EXPECT_FALSE(wdvv_compare(e, 2, {0, 1, 2}).match);
}

TEST(Kontsevich, InsufficientCapsAreRejected) {
  Fan f = example_fan("p2");
  TruncationPolicy p = wdvv_policy(3);
  p.gcap = 2;
  MirrorEngine e(f, p, std::vector<IntVec>{{1, 1}});
  try {
    wdvv_compare(e, 3);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::IncompatibleTruncation);
  }
}

TEST(PropertySuite, ProjectiveLineAtSuiteCapsPasses) {
  Fan f = example_fan("p1");
  MirrorEngine e(f, suite_caps());
  const Report r = run_property_suite(e, "p1");
  EXPECT_GT(r.size(), 50u);
  EXPECT_TRUE(all_pass(r)) << first_failure(r);
}

TEST(PropertySuite, AffinePlanePasses) {
  Fan f = example_fan("c2");
  MirrorEngine e(f, caps(3, 2, 0, 3, 8));
  const Report r = run_property_suite(e, "c2");
  EXPECT_TRUE(all_pass(r)) << first_failure(r);
}

TEST(PropertySuite, SelectionParsesNamesAndRejectsUnknown) {
  SuiteSelection s = SuiteSelection::parse("flow,theta");
  EXPECT_TRUE(s.flow);
  EXPECT_TRUE(s.theta);
  EXPECT_FALSE(s.birkhoff);
  try {
    SuiteSelection::parse("flow,nonsense");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MalformedInput);
  }
}

TEST(NegativeControls, EveryPerturbationIsDetected) {
  for (const char* name : {"p1", "c2"}) {
    Fan f = example_fan(name);
    MirrorEngine e(f, suite_caps());
    int applicable = 0;
    for (const auto& c : negative_controls(e, name)) {
      if (!c.applicable) continue;
      ++applicable;
      EXPECT_TRUE(c.detected) << name << ": " << c.property;
    }
    EXPECT_GT(applicable, 20) << name;
  }
}
