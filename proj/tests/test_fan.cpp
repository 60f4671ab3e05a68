#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "support.hpp"

using namespace toricmirror;
using namespace toricmirror::testing;

TEST(FanLoading, ProjectiveLineIsValid) {
  Fan f = example_fan("p1");
  EXPECT_EQ(f.rank(), 1);
  EXPECT_EQ(f.num_rays(), 2);
  EXPECT_TRUE(f.is_complete());
}

TEST(FanLoading, ProjectivePlaneIsValid) {
  Fan f = example_fan("p2");
  EXPECT_EQ(f.num_cones(), 3);
  EXPECT_TRUE(f.is_complete());
  EXPECT_EQ(f.polarization(), (IntVec{1, 1, 1}));
}

TEST(FanLoading, AffinePlaneIsNotComplete) {
  Fan f = example_fan("c2");
  EXPECT_FALSE(f.is_complete());
  EXPECT_TRUE(f.mori_generators().empty());
}

TEST(FanLoading, DeterminantTwoConeIsRejected) {
  try {
    make_fan(2, {{1, 0}, {1, 2}}, {{0, 1}});
    FAIL() << "expected NonUnimodularCone";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonUnimodularCone);
    EXPECT_NE(std::string(e.what()).find("determinant 2"), std::string::npos);
  }
}

TEST(FanLoading, ConvexityCertificatePairsPositivelyWithEveryWall) {
  for (const char* name : {"p1", "p2", "f1"}) {
    Fan f = example_fan(name);
    for (const auto& g : f.mori_generators()) EXPECT_GE(dot(f.convexity_certificate(), g), 1) << name;
  }
}

// Malformed corpus: every file names its expected error in "expect.json".
TEST(FanLoading, MalformedCorpusRaisesTheRecordedErrors) {
  const std::string dir = source_path("tests/data/malformed");
  Json expect = parse_json_text(read_text_file(dir + "/expect.json"), "expect.json");
  ASSERT_FALSE(expect.empty());
  int seen = 0;
  for (const auto& [file, kind] : expect.items()) {
    try {
      read_fan_file(dir + "/" + file);
      ADD_FAILURE() << file << " loaded without error";
    } catch (const Error& e) {
      EXPECT_EQ(error_name(e.kind()), kind.get<std::string>()) << file << ": " << e.what();
    }
    ++seen;
  }
  int files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().filename() != "expect.json") ++files;
  EXPECT_EQ(seen, files) << "every corpus file needs an expectation";
}

TEST(PointData, PointInsideFirstConeOfProjectivePlane) {
  Fan f = example_fan("p2");
  PointData p = point_data(f, {1, 1});
  EXPECT_EQ(p.psi, (IntVec{1, 1, 0}));
  EXPECT_EQ(p.norm, 2);
  EXPECT_EQ(p.min_cone, (std::vector<int>{0, 1}));
}

TEST(PointData, NegativeAxisPointUsesSecondCone) {
  Fan f = example_fan("p2");
  PointData p = point_data(f, {-1, 0});
  EXPECT_EQ(p.psi, (IntVec{0, 1, 1}));
  EXPECT_EQ(p.norm, 2);
}

TEST(PointData, SecondRayOfProjectiveLineCarriesTheLineClass) {
  Fan f = example_fan("p1");
  EXPECT_EQ(point_data(f, {-1}).beta, (IntVec{1, 1}));
  EXPECT_EQ(point_data(f, {1}).beta, (IntVec{0, 0}));
}

TEST(PointData, PointOutsideSupportIsRejected) {
  Fan f = example_fan("c2");
  try {
    point_data(f, {-1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutsideSupport);
  }
}

TEST(Pairing, OppositeRaysOfProjectiveLineGiveTheLine) {
  Fan f = example_fan("p1");
  EXPECT_EQ(pairing_d(f, {1}, {-1}).d, (IntVec{1, 1}));
}

TEST(Pairing, RaysWhoseSumStaysInACommonConeGiveZero) {
  Fan f = example_fan("p2");
  EXPECT_EQ(pairing_d(f, {1, 0}, {-1, -1}).d, (IntVec{0, 0, 0}));
}

TEST(Pairing, SymmetryCocycleAndSplittingAdditivity) {
  std::mt19937 rng(11);
  for (const char* name : {"p1", "p2", "c2", "f1"}) {
    Fan f = example_fan(name);
    auto pts = enumerate_points(f, 3);
    std::uniform_int_distribution<size_t> pick(0, pts.size() - 1);
    for (int t = 0; t < 60; ++t) {
      const IntVec &k = pts[pick(rng)].k, &l = pts[pick(rng)].k, &j = pts[pick(rng)].k;
      EXPECT_EQ(pairing_d(f, k, l).d, pairing_d(f, l, k).d);
      EXPECT_EQ(add(pairing_d(f, k, l).d, pairing_d(f, add(k, l), j).d),
                add(pairing_d(f, l, j).d, pairing_d(f, k, add(l, j)).d));
      EXPECT_EQ(sub(add(f.beta(k), f.beta(l)), f.beta(add(k, l))), pairing_d(f, k, l).d);
    }
  }
}

TEST(Enumeration, ProjectiveLineUpToTwo) {
  Fan f = example_fan("p1");
  auto pts = enumerate_points(f, 2);
  ASSERT_EQ(pts.size(), 5u);
  EXPECT_EQ(pts[0].k, (IntVec{0}));
}

TEST(Enumeration, ProjectivePlaneUpToOneIsOriginAndRays) {
  Fan f = example_fan("p2");
  auto pts = enumerate_points(f, 1);
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_EQ(pts[0].k, (IntVec{0, 0}));
}

TEST(Enumeration, CapZeroIsTheOrigin) {
  for (const char* name : {"p1", "p2", "c2", "f1"}) EXPECT_EQ(enumerate_points(example_fan(name), 0).size(), 1u);
}

// Brute force over a box: the points with psi summing to at most cap.
TEST(Enumeration, MatchesBoxSearch) {
  for (const char* name : {"p2", "f1", "c2"}) {
    Fan f = example_fan(name);
    const int cap = 3;
    size_t count = 0;
    for (int a = -cap; a <= cap; ++a)
      for (int b = -cap; b <= cap; ++b)
        if (auto psi = f.psi_if_inside({a, b}); psi && sum(*psi) <= cap) ++count;
    EXPECT_EQ(enumerate_points(f, cap).size(), count) << name;
  }
}

TEST(EffectiveClasses, AffinePlaneHasOnlyZero) {
  auto eff = enumerate_effective(example_fan("c2"), 5);
  ASSERT_EQ(eff.size(), 1u);
  EXPECT_EQ(eff[0].d, (IntVec{0, 0}));
}

TEST(EffectiveClasses, ProjectiveLineUpToFour) {
  auto eff = enumerate_effective(example_fan("p1"), 4);
  ASSERT_EQ(eff.size(), 3u);
  EXPECT_EQ(eff[1].d, (IntVec{1, 1}));
  EXPECT_EQ(eff[2].d, (IntVec{2, 2}));
}

TEST(EffectiveClasses, ProjectivePlaneUpToThree) {
  auto eff = enumerate_effective(example_fan("p2"), 3);
  ASSERT_EQ(eff.size(), 2u);
  EXPECT_EQ(eff[1].d, (IntVec{1, 1, 1}));
}

// Oracle: every relation d in a box whose negative entries sit in one cone,
// with theta-degree <= cap.
TEST(EffectiveClasses, HirzebruchMatchesBoxSearch) {
  Fan f = example_fan("f1");
  const int cap = 4;
  std::set<IntVec> expected;
  const int B = 5;
  IntVec d(4);
  for (d[0] = -B; d[0] <= B; ++d[0])
    for (d[1] = -B; d[1] <= B; ++d[1])
      for (d[2] = -B; d[2] <= B; ++d[2])
        for (d[3] = -B; d[3] <= B; ++d[3]) {
          IntVec s(2, 0);
          for (int i = 0; i < 4; ++i)
            for (int a = 0; a < 2; ++a) s[a] += d[i] * f.ray(i)[a];
          if (s != IntVec{0, 0} || f.theta_degree(d) > cap) continue;
          bool ok = false;
          for (const auto& c : f.cones()) {
            bool all = true;
            for (int i = 0; i < 4; ++i)
              if (d[i] < 0 && !std::binary_search(c.begin(), c.end(), i)) all = false;
            ok = ok || all;
          }
          if (ok) expected.insert(d);
        }
  std::set<IntVec> got;
  for (const auto& c : enumerate_effective(f, cap)) got.insert(c.d);
  EXPECT_EQ(got, expected);
}

TEST(FixedPointWeights, ProjectiveLineFirstCone) {
  Fan f = example_fan("p1");
  auto w = fixed_point_weights(f, 0);
  EXPECT_EQ(w[0], (IntVec{1}));
  EXPECT_EQ(w[1], (IntVec{0}));
}

TEST(FixedPointWeights, ProjectivePlaneFirstCone) {
  Fan f = example_fan("p2");
  auto w = fixed_point_weights(f, 0);
  EXPECT_EQ(w[0], (IntVec{1, 0}));
  EXPECT_EQ(w[1], (IntVec{0, 1}));
  EXPECT_EQ(w[2], (IntVec{0, 0}));
}

TEST(FixedPointWeights, ReproduceEveryCharacter) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> c(-5, 5);
  for (const char* name : {"p1", "p2", "c2", "f1"}) {
    Fan f = example_fan(name);
    for (int x = 0; x < f.num_cones(); ++x) {
      auto w = fixed_point_weights(f, x);
      for (int t = 0; t < 10; ++t) {
        IntVec chi(f.rank());
        for (auto& v : chi) v = c(rng);
        IntVec total(f.rank(), 0);
        for (int i = 0; i < f.num_rays(); ++i)
          for (int a = 0; a < f.rank(); ++a) total[a] += dot(chi, f.ray(i)) * w[i][a];
        EXPECT_EQ(total, chi) << name;
      }
    }
  }
}
