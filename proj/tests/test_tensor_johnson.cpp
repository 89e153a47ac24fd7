#include <gtest/gtest.h>

#include "kkpert/johnson.hpp"
#include "oracles.hpp"

using namespace kkpert;

namespace {

Matrix e(int k, int i, int j) { return matrix_unit(k, i, j); }

/// x ↦ Σ a_k x b_k, written out directly.
Matrix elementary(const std::vector<std::pair<Matrix, Matrix>>& pairs, const Matrix& x) {
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (const auto& [a, b] : pairs) y += a * x * b;
  return y;
}

/// Unital perturbation id + Δ of the inclusion of n, with Δ(I) = 0 and HS-to-HS norm `size`.
LinearOperatorMap unital_perturbation(const AlgebraPtr& n, double size, CounterRng& rng) {
  const int k = n->ambient_dim();
  const auto& q = n->space.hs_orthonormal_basis();
  Matrix c(Eigen::Index(k) * k, static_cast<Eigen::Index>(q.size()));
  for (std::size_t j = 0; j < q.size(); ++j)
    c.col(static_cast<Eigen::Index>(j)) = vec(n->space.project(rng.gaussian_matrix(k, k)));
  const LinearOperatorMap raw(n->space, k, c);
  const Matrix at_unit = raw.apply_projected(identity(k));
  const auto centered = LinearOperatorMap::from_function(n->space, k, [&](const Matrix& x) {
    return Matrix(raw.apply_projected(x) - (x.trace() / double(k)) * at_unit);
  });
  const double scale = size / relaxation_upper_bound(centered, k);
  return identity_map(n->space) + centered.scaled(scale);
}

}  // namespace

TEST(Tensor, TrivialModuleAction) {
  const auto a = full_matrix_algebra(2);
  const auto u = canonical_diagonal_element(a);
  const auto v = module_action(identity(2), u, identity(2));
  EXPECT_TRUE(tensor_equal(u, v));
}

TEST(Tensor, CanonicalDiagonalCommutesWithUnit) {
  const auto a = full_matrix_algebra(2);
  const auto u = make_tensor(a, {{e(2, 0, 0), e(2, 0, 0)}, {e(2, 1, 0), e(2, 0, 1)}});
  const auto au = left_action(e(2, 0, 1), u);
  const auto ua = right_action(u, e(2, 0, 1));
  // e12·u = e12e11⊗e11 + e12e21⊗e12 = e11⊗e12, and u·e12 = e11⊗e11e12 + e21⊗e12e12 = e11⊗e12.
  const std::vector<std::pair<Matrix, Matrix>> expected{{e(2, 0, 0), e(2, 0, 1)}};
  CounterRng rng(1);
  for (int t = 0; t < 4; ++t) {
    const Matrix x = rng.gaussian_matrix(2, 2);
    EXPECT_LE(op_norm(elementary(au.pairs, x) - elementary(expected, x)), 1e-14);
    EXPECT_LE(op_norm(elementary(ua.pairs, x) - elementary(expected, x)), 1e-14);
  }
}

TEST(Tensor, BimoduleAssociativity) {
  const auto a = block_diagonal_algebra({2, 1}, 3);
  const auto u = canonical_diagonal_element(a);
  CounterRng rng(2);
  for (int t = 0; t < 10; ++t) {
    const Matrix x = a->space.project(rng.gaussian_matrix(3, 3));
    const Matrix y = a->space.project(rng.gaussian_matrix(3, 3));
    const auto lhs = right_action(left_action(x, u), y);
    const auto rhs = left_action(x, right_action(u, y));
    EXPECT_LE(tensor_distance(lhs, rhs), 1e-12);
  }
}

TEST(Tensor, Multiply) {
  const auto a = full_matrix_algebra(2);
  EXPECT_NEAR((multiply(make_tensor(a, {{identity(2), identity(2)}})) - identity(2)).norm(), 0.0, 0.0);
  EXPECT_NEAR((multiply(canonical_diagonal_element(a)) - identity(2)).norm(), 0.0, 0.0);
  CounterRng rng(3);
  const auto b = block_diagonal_algebra({2, 1}, 3);
  const auto u = canonical_diagonal_element(b);
  const Matrix x = b->space.project(rng.gaussian_matrix(3, 3));
  EXPECT_LE(op_norm(multiply(left_action(x, u)) - x * multiply(u)), 1e-14);
}

TEST(Tensor, ElementaryOperators) {
  const auto a = full_matrix_algebra(2);
  CounterRng rng(4);
  const Matrix x = rng.gaussian_matrix(2, 2);
  const auto id = elementary_operator(make_tensor(a, {{identity(2), identity(2)}}));
  EXPECT_LE(op_norm(id.apply(x) - x), 1e-14);
  const auto comp = elementary_operator(make_tensor(a, {{e(2, 0, 0), e(2, 0, 0)}}));
  EXPECT_LE(op_norm(comp.apply(x) - x(0, 0) * e(2, 0, 0)), 1e-14);
  const auto can = elementary_operator(canonical_diagonal_element(a));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const Matrix m = e(2, i, j);
      const Matrix direct = e(2, 0, 0) * m * e(2, 0, 0) + e(2, 1, 0) * m * e(2, 0, 1);
      EXPECT_LE(op_norm(can.apply(m) - direct), 1e-14);
      // e11·x·e11 + e21·x·e12 = x₁₁·I.
      EXPECT_LE(op_norm(can.apply(m) - m(0, 0) * identity(2)), 1e-14);
    }
}

TEST(Tensor, HaagerupNorms) {
  const auto a = full_matrix_algebra(2);
  const auto ii = h_norm_interval(make_tensor(a, {{identity(2), identity(2)}}));
  EXPECT_NEAR(ii.lower, 1.0, 1e-9);
  EXPECT_NEAR(ii.upper, 1.0, 1e-9);
  for (const auto& prof : std::vector<std::vector<int>>{{1}, {2}, {1, 1}, {2, 1}, {2, 3}}) {
    int k = 0;
    for (int s : prof) k += s;
    const auto iv = h_norm_interval(canonical_diagonal_element(block_diagonal_algebra(prof, k)));
    EXPECT_NEAR(iv.lower, 1.0, 1e-6);
    EXPECT_NEAR(iv.upper, 1.0, 1e-6);
  }
}

TEST(Tensor, TransportedNormWithinConditionSquared) {
  const auto n = block_diagonal_algebra({1, 1}, 2);
  Matrix s = identity(2);
  s(0, 1) = 0.2;
  const auto tr = transport_diagonal(canonical_diagonal_element(n), s);
  const double cond = oracle::opnorm(s) * oracle::opnorm(s.inverse());
  EXPECT_GE(tr.certificate.h_norm.lower, 1.0 - 1e-9);
  EXPECT_LE(tr.certificate.h_norm.upper, cond * cond + 1e-9);
}

TEST(Diagonal, ScalarOneByOne) {
  const auto n = build_algebra(1, {identity(1)});
  const auto [u, cert] = canonical_diagonal(n);
  EXPECT_EQ(u.length(), 1u);
  EXPECT_NEAR(std::abs(u.pairs[0].first(0, 0) * u.pairs[0].second(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(cert.h_norm.upper, 1.0, 1e-9);
  EXPECT_TRUE(cert.passed());
}

TEST(Diagonal, FullTwoByTwo) {
  const auto n = full_matrix_algebra(2);
  const auto [u, cert] = canonical_diagonal(n);
  const std::vector<std::pair<Matrix, Matrix>> expected{{e(2, 0, 0), e(2, 0, 0)}, {e(2, 1, 0), e(2, 0, 1)}};
  CounterRng rng(5);
  const Matrix x = rng.gaussian_matrix(2, 2);
  EXPECT_LE(op_norm(elementary(u.pairs, x) - elementary(expected, x)), 1e-14);
  EXPECT_LE(cert.c1_residual, 1e-12);
  EXPECT_EQ(cert.c2_residual, 0.0);
}

TEST(Diagonal, AbelianTwoByTwo) {
  const auto n = build_algebra(2, {identity(2), e(2, 0, 0)});
  const auto [u, cert] = canonical_diagonal(n);
  const std::vector<std::pair<Matrix, Matrix>> expected{{e(2, 0, 0), e(2, 0, 0)}, {e(2, 1, 1), e(2, 1, 1)}};
  CounterRng rng(6);
  const Matrix x = rng.gaussian_matrix(2, 2);
  EXPECT_LE(op_norm(elementary(u.pairs, x) - elementary(expected, x)), 1e-12);
  EXPECT_TRUE(cert.passed());
}

TEST(Diagonal, TransportIdentityAndShear) {
  const auto n = build_algebra(2, {identity(2), e(2, 0, 0)});
  const auto u = canonical_diagonal_element(n);
  EXPECT_TRUE(tensor_equal(transport_diagonal(u, identity(2)).element, u));
  const double t = 0.1;
  Matrix s = identity(2);
  s(0, 1) = t;
  const auto tr = transport_diagonal(u, s);
  // S e11 S⁻¹ = [[1, −t], [0, 0]], so the target is span{I, [[1,−t],[0,0]]}.
  Matrix g = e(2, 0, 0);
  g(0, 1) = -t;
  EXPECT_LE(tr.element.algebra->space.residual(g), 1e-12);
  EXPECT_LE(tr.certificate.c1_residual, 1e-10);
  EXPECT_LE(tr.certificate.c2_residual, 1e-10);
  EXPECT_LE(tr.certificate.h_norm.upper, tr.condition_number * tr.condition_number + 1e-9);
}

TEST(Diagonal, CheckerVerdicts) {
  const auto m23 = block_diagonal_algebra({2, 3}, 5);
  EXPECT_TRUE(check_diagonal(canonical_diagonal_element(m23), *m23).passed());
  const auto m2 = full_matrix_algebra(2);
  const auto ii = check_diagonal(make_tensor(m2, {{identity(2), identity(2)}}), *m2);
  EXPECT_TRUE(ii.c2_pass);
  EXPECT_FALSE(ii.c1_pass);
  const auto twice = check_diagonal(scaled(canonical_diagonal_element(m2), 2.0), *m2);
  EXPECT_TRUE(twice.c1_pass);
  EXPECT_FALSE(twice.c2_pass);
  EXPECT_NEAR(twice.c2_residual, 1.0, 1e-14);
}

TEST(JohnsonStep, HomomorphismHasZeroCorrection) {
  const auto n = block_diagonal_algebra({2, 1}, 3);
  const auto r = johnson_step(identity_map(n->space), canonical_diagonal_element(n));
  EXPECT_LE(r.coefficients().norm(), 1e-14);
}

TEST(JohnsonStep, ScaledIdentityClosedForm) {
  const double eta = 0.01;
  const auto n = full_matrix_algebra(2);
  const auto r = johnson_step(identity_map(n->space).scaled(1.0 + eta), canonical_diagonal_element(n));
  CounterRng rng(7);
  const Matrix m = rng.gaussian_matrix(2, 2);
  EXPECT_LE(op_norm(r.apply(m) + (eta + eta * eta) * (1.0 + eta) * m), 1e-10);
}

TEST(JohnsonStep, CorrectionBoundedByProductOfNorms) {
  const auto n = block_diagonal_algebra({2, 1}, 3);
  const auto u = canonical_diagonal_element(n);
  const double u_ub = h_norm_interval(u).upper;
  CounterRng rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto l = unital_perturbation(n, 0.01 * (1.0 + rng.uniform()), rng);
    const auto r = johnson_step(l, u);
    const double r_lower = op_norm_interval(r, 3, monitor_search()).lower;
    const double l_ub = op_norm_interval(l, 3, monitor_search()).upper;
    const double d_ub = (2.0 + l_ub) * op_norm_interval(l - identity_map(n->space), 3, monitor_search()).upper;
    EXPECT_LE(r_lower, u_ub * l_ub * d_ub + 1e-12);
  }
}

TEST(Homomorphize, HomomorphismIsFixed) {
  const auto n = block_diagonal_algebra({2, 1}, 3);
  const auto [pi, sch] = homomorphize(identity_map(n->space), canonical_diagonal_element(n));
  EXPECT_EQ(sch.iterations, 0);
  EXPECT_LE((pi.coefficients() - identity_map(n->space).coefficients()).norm(), 0.0);
}

TEST(Homomorphize, ScaledIdentityOnTwoBlocks) {
  const double eta = 1e-3;
  const auto n = block_diagonal_algebra({2, 1}, 3);
  const auto u = canonical_diagonal_element(n);
  JohnsonOptions opt;
  opt.eps = 0.1;
  const auto l = identity_map(n->space).scaled(1.0 + eta);
  const auto [pi, sch] = homomorphize(l, u, opt);
  EXPECT_TRUE(sch.converged);
  EXPECT_LE(sch.final_basis_residual, 1e-12);
  EXPECT_LE(sch.pi_minus_l.lower, 4.0 * 1.0 * (1.0 + eta) * sch.delta + 1e-15);
  // Oracle: on c·id the step is c ↦ c + c²(1 − c) and the defect is |c − c²|.
  double c = 1.0 + eta;
  for (std::size_t q = 0; q < 2 && q < sch.records.size(); ++q) {
    EXPECT_NEAR(sch.records[q].defect_measured, std::abs(c - c * c), 1e-12) << "step " << q;
    c = c + c * c * (1.0 - c);
  }
  EXPECT_TRUE(sch.quadratic_ok);
  for (std::size_t q = 0; q + 1 < sch.records.size(); ++q) {
    const auto& r = sch.records[q];
    const double bound = (2.0 * sch.u_norm + sch.u_norm * sch.u_norm * r.mu_q * r.mu_q) * r.defect_measured *
                         r.defect_measured;
    EXPECT_LE(sch.records[q + 1].defect_measured, bound + Tolerances{}.sched_tol);
  }
}
