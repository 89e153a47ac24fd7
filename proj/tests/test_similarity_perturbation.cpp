#include <gtest/gtest.h>

#include "kkpert/perturbation.hpp"
#include "kkpert/similarity.hpp"
#include "oracles.hpp"

using namespace kkpert;

namespace {

Matrix e(int k, int i, int j) { return matrix_unit(k, i, j); }

Matrix near_identity(int k, double size, CounterRng& rng) {
  Matrix x = rng.gaussian_matrix(k, k);
  return identity(k) + size * x / op_norm(x);
}

double non_scalar_part(const Matrix& z) { return (z - (z.trace() / double(z.rows())) * identity(int(z.rows()))).norm(); }

}  // namespace

TEST(Similarity, IdenticalRepresentations) {
  const auto a = full_matrix_algebra(2);
  const auto id = identity_representation(a);
  const auto r = build_similarity(id, id, canonical_diagonal_element(a));
  EXPECT_EQ((r.s - identity(2)).norm(), 0.0);
  EXPECT_TRUE(r.invertible);
}

TEST(Similarity, ConjugatedRepresentationRecoversConjugator) {
  const auto a = full_matrix_algebra(2);
  const auto id = identity_representation(a);
  const Matrix s0 = identity(2) + 0.01 * e(2, 0, 1);
  const auto r = build_similarity(conjugated(id, s0), id, canonical_diagonal_element(a));
  EXPECT_LE(r.intertwining_residual, 1e-10);
  EXPECT_TRUE(r.invertible);
  // S·S0⁻¹ commutes with M₂, so it is a scalar λ.
  const Matrix q = r.s * s0.inverse();
  EXPECT_LE(non_scalar_part(q), 1e-12);
  EXPECT_NEAR(std::abs(q(0, 0) - 1.0), 0.0, 1e-3);
}

TEST(Similarity, DeviationBoundOnNearbyPairs) {
  const auto a = block_diagonal_algebra({2, 1}, 3);
  const auto u = canonical_diagonal_element(a);
  const auto id = identity_representation(a);
  CounterRng rng(31);
  for (int t = 0; t < 20; ++t) {
    const auto pi1 = conjugated(id, near_identity(3, 0.01 * rng.uniform(), rng));
    const auto r = build_similarity(pi1, id, u);
    // Ψ(u) − I = Σ π₁(a_k)(π₂ − π₁)(b_k), bounded by the three norms.
    const Matrix s12 = psi(pi1.map, id.map, u);
    EXPECT_LE(op_norm(s12 - identity(3)), r.u_norm * r.diff_cb * r.pi1_cb + 1e-12);
    EXPECT_LE(r.intertwining_residual, 1e-9);
  }
}

TEST(Derivation, InnerDerivations) {
  const auto a = full_matrix_algebra(2);
  EXPECT_EQ(inner_derivation(identity(2), *a).coefficients().norm(), 0.0);
  const auto d = inner_derivation(e(2, 0, 0), *a);
  EXPECT_LE((d.apply(e(2, 0, 1)) - e(2, 0, 1)).norm(), 1e-15);
  EXPECT_LE((d.apply(e(2, 1, 0)) + e(2, 1, 0)).norm(), 1e-15);
  const auto b = block_diagonal_algebra({2, 1}, 3);
  Matrix central = identity(3);
  central(2, 2) = 5.0;
  EXPECT_LE(inner_derivation(central, *b).coefficients().norm(), 1e-12);
}

TEST(Derivation, ZeroDerivationGivesCommutant) {
  const auto a = block_diagonal_algebra({2, 1}, 3);
  const auto zero = inner_derivation(identity(3), *a);
  const auto sol = solve_derivation(zero, canonical_diagonal_element(a), identity_representation(a));
  EXPECT_LE(commutant(*a).residual(sol.phi), 1e-12);
}

TEST(Derivation, InnerDerivationOfUnitIsRecovered) {
  const auto a = full_matrix_algebra(2);
  const auto sol =
      solve_derivation(inner_derivation(e(2, 0, 1), *a), canonical_diagonal_element(a), identity_representation(a));
  EXPECT_LE(non_scalar_part(sol.phi - e(2, 0, 1)), 1e-12);
  EXPECT_LE(sol.reconstruction_residual, 1e-12);
}

TEST(Derivation, NormBoundOnRandomInnerDerivations) {
  const auto a = block_diagonal_algebra({2, 1}, 3);
  const auto u = canonical_diagonal_element(a);
  const auto pi = identity_representation(a);
  CounterRng rng(41);
  for (int t = 0; t < 20; ++t) {
    const auto sol = solve_derivation(inner_derivation(rng.gaussian_matrix(3, 3), *a), u, pi);
    EXPECT_LE(sol.reconstruction_residual, 1e-9);
    EXPECT_LE(sol.phi_norm, sol.u_norm * sol.d_cb * sol.pi_cb + 1e-9);
  }
}

TEST(Derivation, NonDerivationIsRejected) {
  const auto a = full_matrix_algebra(2);
  const auto t = LinearOperatorMap::from_function(a->space, 2, [](const Matrix& x) { return Matrix(x.transpose()); });
  try {
    solve_derivation(t, canonical_diagonal_element(a), identity_representation(a));
    FAIL() << "expected NotADerivation";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::NotADerivation);
  }
}

TEST(CommutantDistance, MemberOfCommutant) {
  const auto a = block_diagonal_algebra({2, 1}, 3);
  Matrix z = identity(3);
  z(2, 2) = -2.0;
  EXPECT_LE(commutant_distance(z, *a).upper, Tolerances{}.dist_tol);
}

TEST(CommutantDistance, UnitAgainstScalars) {
  const auto a = full_matrix_algebra(2);
  const double scan = oracle::complex_grid_min(
      [](oracle::Complex c) { return oracle::opnorm(oracle::unit(2, 0, 1) - c * oracle::Mat::Identity(2, 2)); }, 1.0,
      400);
  const auto iv = commutant_distance(e(2, 0, 1), *a);
  EXPECT_TRUE(iv.contains(scan, 1e-7)) << iv.lower << " " << iv.upper << " scan " << scan;
}

TEST(CommutantDistance, BoundedByDerivationNorm) {
  const auto a = block_diagonal_algebra({2, 1}, 3);
  const auto u = canonical_diagonal_element(a);
  CounterRng rng(51);
  for (int t = 0; t < 20; ++t) {
    const auto c = commutant_bound_check(rng.gaussian_matrix(3, 3), a, u);
    EXPECT_TRUE(c.holds) << c.distance.lower << " > " << c.bound;
  }
}

TEST(NearInclusion, ContainedSpace) {
  const auto f = build_space(2, {identity(2), e(2, 0, 0)});
  const auto iv = near_inclusion_gamma(build_space(2, {identity(2)}), f, 1);
  EXPECT_EQ(iv.lower, 0.0);
  EXPECT_LE(iv.upper, Tolerances{}.dist_tol);
}

TEST(NearInclusion, ShearInstanceBelowAnalytic) {
  const auto n = block_diagonal_algebra({1, 1}, 2);
  const auto inst = make_instance(n, identity(2) + 1e-2 * e(2, 0, 1));
  EXPECT_LE(near_inclusion_gamma(inst.m->space, inst.n->space, 1).lower, inst.gamma_analytic);
}

TEST(NearInclusion, Asymmetric) {
  const auto small = build_space(2, {identity(2)});
  const auto big = build_space(2, {identity(2), e(2, 0, 1)});
  const auto forward = near_inclusion_gamma(small, big, 1);
  const auto backward = near_inclusion_gamma(big, small, 1);
  EXPECT_LE(forward.upper, Tolerances{}.dist_tol);
  EXPECT_GT(backward.lower, 0.1);
}

TEST(KkDistance, SelfDistanceIsZero) {
  const auto e1 = block_diagonal_algebra({2, 1}, 3)->space;
  const auto d = kk_distance_interval(e1, e1);
  EXPECT_EQ(d.interval.lower, 0.0);
  EXPECT_EQ(d.interval.upper, 0.0);
}

TEST(KkDistance, DominatesSubspaceGaps) {
  const auto inst = generate_instance({1, 1}, 2, 1e-3, 3);
  const auto d = kk_distance_interval(inst.m->space, inst.n->space);
  const double g1 = near_inclusion_gamma(inst.m->space, inst.n->space, 1).lower;
  const double g2 = near_inclusion_gamma(inst.n->space, inst.m->space, 1).lower;
  EXPECT_GE(d.interval.upper, std::max(g1, g2) - Tolerances{}.dist_tol);
  EXPECT_LE(d.interval.lower, inst.gamma_analytic);
}

TEST(CbInclusion, EqualAlgebras) {
  const auto n = block_diagonal_algebra({1, 1}, 2);
  const auto rep = cb_near_inclusion_check(*n, *n, canonical_diagonal_element(n), {1, 2, 3, 4});
  for (const auto& lv : rep.levels) EXPECT_EQ(lv.gamma.lower, 0.0);
  EXPECT_TRUE(rep.passed);
}

TEST(CbInclusion, GeneratedInstanceMargins) {
  const auto inst = generate_instance({1, 1}, 2, 1e-2, 4);
  const auto rep = cb_near_inclusion_check(*inst.m, *inst.n, inst.u_m.element, {1, 2, 3, 4}, inst.gamma_analytic,
                                           inst.u_m.certificate.h_norm.upper);
  ASSERT_EQ(rep.levels.size(), 4u);
  for (const auto& lv : rep.levels) EXPECT_GT(lv.margin, 0.0) << "level " << lv.level;
}

TEST(CbInclusion, FirstOrderScaling) {
  const auto n = block_diagonal_algebra({1, 1}, 2);
  CounterRng rng(61);
  Matrix x = rng.gaussian_matrix(2, 2);
  x /= op_norm(x);
  const double t = 1e-3;
  const auto a = make_instance(n, identity(2) + t * x);
  const auto b = make_instance(n, identity(2) + 2.0 * t * x);
  const auto ra = cb_near_inclusion_check(*a.m, *a.n, a.u_m.element, {1, 2, 3, 4});
  const auto rb = cb_near_inclusion_check(*b.m, *b.n, b.u_m.element, {1, 2, 3, 4});
  for (std::size_t i = 0; i < ra.levels.size(); ++i) {
    const double ratio = rb.levels[i].gamma.lower / ra.levels[i].gamma.lower;
    EXPECT_GE(ratio, 1.5);
    EXPECT_LE(ratio, 2.5);
  }
}

TEST(Generator, ZeroPerturbation) {
  const auto inst = generate_instance({2, 1}, 3, 0.0, 1);
  EXPECT_EQ(inst.gamma_analytic, 0.0);
  EXPECT_EQ((inst.s0 - identity(3)).norm(), 0.0);
  EXPECT_LE((inst.m->space.onb_columns() - inst.n->space.onb_columns()).norm(), 1e-14);
}

TEST(Generator, SmallPerturbationArithmetic) {
  const double t = 1e-4;
  const auto inst = generate_instance({1, 1}, 2, t, 7);
  // ‖S0 − I‖ = t and cond ≤ (1+t)/(1−t), so γ = 2(1+cond)t lies in [4t, 4t(1+t)/(1−t)].
  const double cond = oracle::opnorm(inst.s0) * oracle::opnorm(inst.s0.inverse());
  EXPECT_NEAR(inst.gamma_analytic, 2.0 * (1.0 + cond) * oracle::opnorm(inst.s0 - identity(2)), 1e-15);
  EXPECT_NEAR(inst.gamma_analytic / (4.0 * t), 1.0, 2.0 * t);
  EXPECT_LT(inst.gamma_analytic, 1.0 / (656.0 * inst.u_m.certificate.h_norm.upper));
}

TEST(Generator, Reproducible) {
  const auto a = generate_instance({2, 1}, 3, 1e-3, 12);
  const auto b = generate_instance({2, 1}, 3, 1e-3, 12);
  EXPECT_EQ((a.s0 - b.s0).norm(), 0.0);
  EXPECT_EQ(a.gamma_analytic, b.gamma_analytic);
  EXPECT_EQ((a.m->space.onb_columns() - b.m->space.onb_columns()).norm(), 0.0);
}
