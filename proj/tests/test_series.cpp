#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace toricmirror;
using namespace toricmirror::testing;

namespace {

// The series space keeps a pointer to its fan, so fans live in statics.
const Fan& fan_p1() {
  static const Fan f = example_fan("p1");
  return f;
}
const Fan& fan_p2() {
  static const Fan f = example_fan("p2");
  return f;
}

HSeries::Space space(const Fan& f, TruncationPolicy p, std::vector<Var> vars = {}) {
  return std::make_shared<const SeriesSpace>(f, p, std::move(vars));
}

SeriesKey key(const HSeries::Space& sp, const IntVec& k, int z, IntVec d, IntVec g = {}) {
  if (g.empty()) g.assign(sp->num_vars(), 0);
  return {sp->cohomology().key(k), z, std::move(d), std::move(g)};
}

HSeries single(const HSeries::Space& sp, const SeriesKey& k, const Rational& c = 1) {
  HSeries s(sp);
  s.add_term(k, c);
  return s;
}

HSeries random_series(const HSeries::Space& sp, std::mt19937& rng, int terms) {
  const auto pts = enumerate_points(sp->fan(), sp->policy().kcoh);
  const auto eff = enumerate_effective(sp->fan(), sp->policy().qcap);
  std::uniform_int_distribution<size_t> pp(0, pts.size() - 1), pe(0, eff.size() - 1);
  // z exponents stay non-positive: with both signs the z window is not an
  // ideal and truncated products stop being associative.
  std::uniform_int_distribution<int> z(-2, 0), c(-4, 4), g(0, 1);
  HSeries s(sp);
  for (int t = 0; t < terms; ++t) {
    IntVec gv(sp->num_vars());
    for (auto& x : gv) x = g(rng);
    s.add_term(key(sp, pts[pp(rng)].k, z(rng), eff[pe(rng)].d, gv), ratio(c(rng), 1 + g(rng)));
  }
  return s;
}

}  // namespace

TEST(SeriesArithmetic, DifferenceOfSquaresInNovikovVariable) {
  auto sp = space(fan_p1(), caps(1, 0, 4, 0));
  HSeries one = HSeries::constant(sp, 1);
  HSeries q = single(sp, key(sp, {0}, -1, {1, 1}));
  HSeries prod = (one + q) * (one - q);
  HSeries expected = one - single(sp, key(sp, {0}, -2, {2, 2}));
  EXPECT_EQ(prod, expected);
}

TEST(SeriesArithmetic, DisjointRaysMultiplyToZero) {
  auto sp = space(fan_p1(), caps(2, 0, 2, 0));
  HSeries a = single(sp, key(sp, {1}, 0, {0, 0}));
  HSeries b = single(sp, key(sp, {-1}, 0, {0, 0}));
  EXPECT_TRUE((a * b).is_zero());
  EXPECT_EQ(a * a, single(sp, key(sp, {2}, 0, {0, 0})));
}

TEST(SeriesArithmetic, CapsDiscardAndCountTerms) {
  auto sp = space(fan_p1(), caps(1, 0, 1, 0, 2));
  HSeries a = single(sp, key(sp, {1}, 0, {0, 0}));
  HSeries sq = a * a;
  EXPECT_TRUE(sq.is_zero());
  EXPECT_EQ(sq.loss().kcoh, 1);
  HSeries far(sp);
  EXPECT_FALSE(far.add_term(key(sp, {0}, -3, {0, 0}), 1));
  EXPECT_FALSE(far.add_term(key(sp, {0}, 0, {2, 2}), 1));
  EXPECT_EQ(far.loss().zwindow, 1);
  EXPECT_EQ(far.loss().qcap, 1);
}

TEST(SeriesArithmetic, ZPartsSplitTheSeries) {
  auto sp = space(fan_p1(), caps(1, 0, 2, 0));
  HSeries s = single(sp, key(sp, {0}, -2, {1, 1}), 3) + single(sp, key(sp, {1}, 1, {0, 0}), -1) +
              HSeries::constant(sp, 5);
  EXPECT_EQ(s.z_negative() + s.z_polynomial(), s);
  EXPECT_EQ(s.z_negative().size(), 1u);
  EXPECT_EQ(s.z_coefficient(-2), single(sp, key(sp, {0}, 0, {1, 1}), 3));
  EXPECT_EQ(s.shift_z(1).z_coefficient(-1), s.z_coefficient(-2));
}

TEST(SeriesArithmetic, DerivativesActOnExponents) {
  auto sp = space(fan_p1(), caps(1, 1, 3, 3), {Var{{0}, 0, 0}});
  HSeries y = HSeries::variable(sp, 0);
  HSeries y3 = y * y * y;
  EXPECT_EQ(y3.derive_var(0), y * y * Rational(3));
  HSeries q2 = single(sp, key(sp, {0}, 0, {2, 2}, {0}));
  EXPECT_EQ(q2.derive_novikov(0), q2 * Rational(2));
  EXPECT_TRUE(HSeries::constant(sp, 4).derive_novikov(1).is_zero());
}

TEST(SeriesArithmetic, RingLawsOnRandomSeries) {
  auto sp = space(fan_p2(), caps(2, 1, 2, 2, 4), {Var{{0, 0}, 0, 0}});
  std::mt19937 rng(5);
  for (int t = 0; t < 25; ++t) {
    HSeries a = random_series(sp, rng, 4), b = random_series(sp, rng, 4), c = random_series(sp, rng, 4);
    EXPECT_EQ(a * b, b * a);
    EXPECT_EQ((a * b) * c, a * (b * c));
    EXPECT_EQ(a * (b + c), a * b + a * c);
    EXPECT_EQ(a * HSeries::constant(sp, 1), a);
  }
}

TEST(SeriesInversion, SingleVariableQuadratic) {
  // y = t - t^2 + 2t^3 - 5t^4 + ... inverts t = y + y^2 (Catalan numbers).
  auto sp = space(fan_p1(), caps(1, 0, 0, 4), {Var{{0}, 0, 0}});
  HSeries y = HSeries::variable(sp, 0);
  ScalarFamily f{{0, y + y * y}};
  HSeries inv = invert(f).at(0);
  const std::vector<Rational> expected{1, -1, 2, -5};
  for (int n = 1; n <= 4; ++n) EXPECT_EQ(inv.coefficient(key(sp, {0}, 0, {0, 0}, {n})), expected[n - 1]) << n;
  EXPECT_EQ(inv.size(), 4u);
}

TEST(SeriesInversion, ComposeWithInverseIsIdentityOnRandomMaps) {
  auto sp = space(fan_p2(), caps(2, 1, 3, 3, 2), {Var{{0, 0}, 0, 0}, Var{{1, 1}, 0, 2}});
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> c(-3, 3);
  for (int t = 0; t < 10; ++t) {
    ScalarFamily f;
    for (int j = 0; j < 2; ++j) {
      HSeries s = HSeries::variable(sp, j) * Rational(1 + (t + j) % 2);
      if (j == 1) s += HSeries::variable(sp, 0) * Rational(c(rng));
      for (int a = 0; a <= 2; ++a)
        for (int b = 0; a + b <= 3; ++b)
          if (a + b >= 2) s.add_term(key(sp, {0, 0}, 0, {0, 0, 0}, {a, b}), ratio(c(rng), 2));
      s.add_term(key(sp, {0, 0}, 0, {1, 1, 1}, {0, 0}), Rational(c(rng)));
      f.emplace(j, s);
    }
    ScalarFamily g = invert(f);
    for (int j = 0; j < 2; ++j) EXPECT_EQ(compose(f.at(j), g), HSeries::variable(sp, j)) << "trial " << t;
  }
}

TEST(SeriesInversion, SingularLinearPartIsRejected) {
  auto sp = space(fan_p1(), caps(1, 0, 0, 3), {Var{{0}, 0, 0}});
  HSeries y = HSeries::variable(sp, 0);
  try {
    invert({{0, y * y}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularJacobian);
  }
}

TEST(TruncationPolicy, VariableCapMayNotExceedCohomologyCap) {
  try {
    caps(1, 2, 1, 1).validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IncompatibleTruncation);
  }
}
