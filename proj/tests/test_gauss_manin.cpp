#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace toricmirror;
using namespace toricmirror::testing;

namespace {

bool gm_equal(const MirrorEngine& e, const GMElement& a, const GMElement& b) { return gm_sum(e, a, b, -1).is_zero(); }

MScalar scalar_at(const MirrorEngine& e, int id, const Poly& p) {
  MScalar f = e.zero_scalar();
  f[id] = p;
  return f;
}

MScalar component(const GMElement& v, const IntVec& k, const MirrorEngine& e) {
  auto it = v.terms.find(k);
  return it == v.terms.end() ? e.zero_scalar() : it->second;
}

HSeries at_base(const HSeries& s) {
  return s.filter([](const SeriesKey& k) { return sum(k.g) == 0; });
}

}  // namespace

TEST(GMMultiply, OppositeRaysOfProjectiveLineGiveQ) {
  Fan f = example_fan("p1");
  MirrorEngine e(f, caps(2, 1, 2, 1));
  GMElement v = gm_multiply(e, {1}, gm_basis(e, {-1}));
  GMElement expected;
  expected.terms.emplace(IntVec{0}, scalar_at(e, find_mono(e, {1, 1}, zero_l(e)), Poly(1)));
  EXPECT_TRUE(gm_equal(e, v, expected));
}

TEST(GMMultiply, SameConeHasNoNovikovFactor) {
  Fan f = example_fan("p2");
  MirrorEngine e(f, caps(2, 1, 2, 1));
  GMElement v = gm_multiply(e, {1, 0}, gm_basis(e, {0, 1}));
  EXPECT_TRUE(gm_equal(e, v, gm_basis(e, {1, 1})));
}

TEST(GMMultiply, OriginActsAsIdentity) {
  Fan f = example_fan("f1");
  MirrorEngine e(f, caps(2, 1, 2, 1));
  std::mt19937 rng(4);
  for (int t = 0; t < 5; ++t) {
    GMElement v = random_gm_element(e, rng, 2);
    EXPECT_TRUE(gm_equal(e, gm_multiply(e, {0, 0}, v), v));
  }
}

TEST(GMMultiply, OperatorsCommute) {
  for (const char* name : {"p2", "f1"}) {
    Fan f = example_fan(name);
    MirrorEngine e(f, caps(2, 1, 3, 1));
    std::mt19937 rng(9);
    auto pts = e.points_up_to(2);
    for (int t = 0; t < 6; ++t) {
      GMElement v = random_gm_element(e, rng, 2);
      const IntVec& k = pts[t % pts.size()];
      const IntVec& l = pts[(3 * t + 1) % pts.size()];
      EXPECT_TRUE(gm_equal(e, gm_multiply(e, k, gm_multiply(e, l, v)), gm_multiply(e, l, gm_multiply(e, k, v))))
          << name;
    }
  }
}

TEST(GMLambdaAction, OmegaHasNoConstantPart) {
  Fan f = example_fan("p2");
  MirrorEngine e(f, caps(2, 1, 2, 1));
  for (int i = 0; i < 2; ++i) {
    GMElement v = gm_lambda_action(e, i, gm_basis(e, {0, 0}));
    EXPECT_TRUE(is_zero(component(v, {0, 0}, e)));
  }
}

TEST(GMLambdaAction, AffinePlaneFirstAxisOnOmega) {
  Fan f = example_fan("c2");
  MirrorEngine e(f, caps(3, 2, 0, 2));
  GMElement v = gm_lambda_action(e, 0, gm_basis(e, {0, 0}));
  GMElement expected = gm_basis(e, {1, 0});
  for (size_t j = 0; j < e.vars().size(); ++j) {
    const IntVec& k = e.vars()[j].point;
    if (k[0] == 0) continue;
    gm_add(e, expected, k, scalar_at(e, find_mono(e, {0, 0}, var_unit(e, k)), Poly(k[0])));
  }
  EXPECT_TRUE(gm_equal(e, v, expected));
  EXPECT_EQ(component(v, {2, 0}, e)[find_mono(e, {0, 0}, var_unit(e, {2, 0}))], Poly(2));
}

TEST(GMLambdaAction, ProjectiveLineRayPicksUpZ) {
  Fan f = example_fan("p1");
  MirrorEngine e(f, caps(2, 1, 2, 1));
  GMElement v = gm_lambda_action(e, 0, gm_basis(e, {1}));
  EXPECT_EQ(component(v, {1}, e)[0], Poly::z_power(1));
}

TEST(GMLambdaAction, AxesCommute) {
  Fan f = example_fan("p2");
  MirrorEngine e(f, caps(2, 1, 2, 1));
  std::mt19937 rng(21);
  for (int t = 0; t < 4; ++t) {
    GMElement v = random_gm_element(e, rng, 1);
    EXPECT_TRUE(gm_equal(e, gm_lambda_action(e, 0, gm_lambda_action(e, 1, v)),
                         gm_lambda_action(e, 1, gm_lambda_action(e, 0, v))));
  }
}

TEST(GMConnection, UnitDirectionOnOmega) {
  Fan f = example_fan("p1");
  MirrorEngine e(f, caps(2, 1, 2, 1));
  const int j = *e.space()->var_index({0});
  EXPECT_TRUE(gm_equal(e, gm_connection(e, j, gm_basis(e, {0})), gm_basis(e, {0}, Poly::z_power(-1))));
}

TEST(GMConnection, IsFlat) {
  for (const char* name : {"p1", "p2", "c2"}) {
    Fan f = example_fan(name);
    MirrorEngine e(f, caps(2, 2, 2, 2));
    const Report r = check_flatness(e, name, 3, 3);
    EXPECT_FALSE(r.empty());
    EXPECT_TRUE(all_pass(r)) << first_failure(r);
  }
}

TEST(GMConnection, LeibnizRule) {
  Fan f = example_fan("p2");
  MirrorEngine e(f, caps(2, 2, 2, 2));
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> pick(0, e.size() - 1), c(-3, 3);
  for (int t = 0; t < 5; ++t) {
    GMElement v = random_gm_element(e, rng, 2);
    MScalar s = e.zero_scalar();
    for (int n = 0; n < 3; ++n) s[pick(rng)] += Poly::term(c(rng), Poly::mono(n - 1));
    for (int j = 0; j < static_cast<int>(e.vars().size()); ++j) {
      GMElement lhs = gm_connection(e, j, gm_scale(e, s, v));
      GMElement rhs = gm_sum(e, gm_scale(e, e.derive(s, j), v), gm_scale(e, s, gm_connection(e, j, v)));
      // Both sides lose the same top-order terms to the mono table.
      GMElement diff = gm_sum(e, lhs, rhs, -1);
      for (const auto& [k, g] : diff.terms)
        for (int id = 0; id < e.size(); ++id)
          if (e.monos().order(id) < e.guard_order() - 1) {
            EXPECT_TRUE(g[id].is_zero()) << describe_mono(e, id);
          }
    }
  }
}

TEST(Theta, OmegaMapsToUpsilonAndIsOneAtTheBase) {
  Fan f = example_fan("p2");
  MirrorEngine e(f, caps(2, 1, 2, 1));
  const MSeries th = theta_apply(e, gm_basis(e, {0, 0}));
  EXPECT_TRUE(th == e.upsilon());
  EXPECT_EQ(e.to_series(th).order_part(0), HSeries::constant(e.space(), 1));
}

TEST(Theta, ColumnsStartWithShiftedProducts) {
  for (const char* name : {"p1", "p2", "f1"}) {
    Fan f = example_fan(name);
    MirrorEngine e(f, caps(3, 1, 2, 1));
    for (const auto& k : e.points_up_to(3)) {
      ClassVec diff = e.P_column(k)[0];
      diff -= classical_shift(e, k);
      e.truncate(diff);
      EXPECT_TRUE(is_zero(diff)) << name << " " << to_string(k);
    }
  }
}

TEST(Theta, ProjectiveLineSquareOfRayColumn) {
  // u_1 (u_1 - z) = phi_{2 b_1} - z phi_{b_1}.
  Fan f = example_fan("p1");
  MirrorEngine e(f, caps(2, 1, 2, 1));
  const HSeries col = e.to_series(e.P_column({2})).order_part(0);
  HSeries expected(e.space());
  expected.add_term({e.module().cohomology().key({2}), 0, {0, 0}, zero_l(e)}, 1);
  expected.add_term({e.module().cohomology().key({1}), 1, {0, 0}, zero_l(e)}, -1);
  EXPECT_EQ(col, expected);
}

TEST(Theta, AllPropertiesHold) {
  for (const char* name : {"p1", "c2"}) {
    Fan f = example_fan(name);
    MirrorEngine e(f, caps(3, 2, 2, 2));
    const Report r = check_theta(e, name);
    EXPECT_TRUE(all_pass(r)) << first_failure(r);
  }
}

TEST(Jacobi, ProjectiveLineRaysGiveQ) {
  Fan f = example_fan("p1");
  MirrorEngine e(f, caps(2, 0, 2, 0), std::vector<IntVec>{});
  HSeries q(e.space());
  q.add_term({e.module().cohomology().key({0}), 0, {1, 1}, {}}, 1);
  bool seen = false;
  for (const auto& entry : jacobi_structure_constants(e))
    if ((entry.k == IntVec{-1} && entry.l == IntVec{1}) || (entry.k == IntVec{1} && entry.l == IntVec{-1})) {
      EXPECT_EQ(entry.jacobi, q);
      EXPECT_EQ(entry.quantum, q);
      seen = true;
    }
  EXPECT_TRUE(seen);
}

TEST(Jacobi, AffinePlaneTableIsClassical) {
  Fan f = example_fan("c2");
  MirrorEngine e(f, caps(3, 2, 0, 2));
  for (const auto& entry : jacobi_structure_constants(e)) {
    HSeries expected(e.space());
    expected.add_term({e.module().cohomology().key(add(entry.k, entry.l)), 0, {0, 0}, zero_l(e)}, 1);
    EXPECT_EQ(at_base(entry.jacobi), expected);
    EXPECT_EQ(entry.jacobi, entry.quantum);
  }
}

TEST(Jacobi, AgreesWithQuantumProducts) {
  for (const char* name : {"p1", "p2"}) {
    Fan f = example_fan(name);
    MirrorEngine e(f, caps(2, 1, 2, 1));
    const Report r = check_jacobi(e, name);
    EXPECT_TRUE(all_pass(r)) << first_failure(r);
  }
}

TEST(NonEquivariant, ProjectiveLinePotential) {
  Fan f = example_fan("p1");
  MirrorEngine e(f, caps(2, 0, 2, 1), std::vector<IntVec>{{0}});
  const NoneqResult r = noneq_restrict(e);
  EXPECT_EQ(potential_string(r.potential), "x^(1) + Q^(1,1)*x^(-1) + y(0)");
  EXPECT_EQ(r.unfolding_rank, 2);
  EXPECT_TRUE(r.products_agree);
}

TEST(NonEquivariant, ProjectivePlaneUnfoldsUniversally) {
  Fan f = example_fan("p2");
  MirrorEngine e(f, caps(2, 2, 3, 1));
  const NoneqResult r = noneq_restrict(e);
  EXPECT_EQ(r.dimension, 3);
  EXPECT_EQ(r.unfolding_rank, 3);
  EXPECT_TRUE(r.products_agree);
}

TEST(NonEquivariant, AffinePlaneProductsAreClassical) {
  Fan f = example_fan("c2");
  MirrorEngine e(f, caps(3, 2, 0, 2));
  const NoneqResult r = noneq_restrict(e);
  EXPECT_EQ(r.dimension, 1);
  ASSERT_EQ(r.products.size(), 1u);
  EXPECT_EQ(r.products[0].via_phi, (std::vector<Rational>{1}));
  EXPECT_EQ(r.products[0].d, (IntVec{0, 0}));
}

TEST(NonEquivariant, SectionMustLiftTheBasis) {
  Fan f = example_fan("p1");
  MirrorEngine e(f, caps(2, 1, 2, 1));
  CohClass bad = phi_class(f, {1});
  add_to(bad, BasisKey{0, {0}}, 1);
  try {
    noneq_restrict(e, {phi_class(f, {0}), bad});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::SectionNotALift);
  }
}

TEST(NonEquivariant, RaysAloneDoNotUnfoldTheProjectiveLine) {
  Fan f = example_fan("p1");
  MirrorEngine e(f, caps(2, 0, 2, 0), std::vector<IntVec>{});
  try {
    noneq_restrict(e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::RankDeficientUnfolding);
  }
}
