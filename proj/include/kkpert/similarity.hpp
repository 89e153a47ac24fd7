#pragma once

// Similarities between neighboring representations, derivations solved through a
// virtual diagonal, and distance to the commutant.

#include <optional>
#include <string>

#include "kkpert/distance.hpp"
#include "kkpert/htensor.hpp"

namespace kkpert {

struct Representation {
  AlgebraPtr source;
  LinearOperatorMap map;
  bool unital = false;
  double unital_residual = 0.0;
  double multiplicativity_residual = 0.0;

  int target_dim() const { return map.codomain_dim(); }
  Matrix operator()(const Matrix& m) const { return map.apply_projected(m); }
};

/// Wraps a map as a representation after checking unitality and multiplicativity.
inline Representation make_representation(AlgebraPtr source, LinearOperatorMap map, const Tolerances& tol = {}) {
  if (map.domain().ambient_dim() != source->ambient_dim() || map.domain().dim() != source->dim() ||
      (map.domain().onb_columns() - source->space.onb_columns()).norm() > 1e-10)
    throw Error(ErrorKind::SourceMismatch, "representation map is not defined on the source algebra");
  Representation r{std::move(source), std::move(map)};
  const int kt = r.target_dim();
  r.unital_residual = op_norm(r.map.apply_projected(identity(r.source->ambient_dim())) - identity(kt));
  r.unital = r.unital_residual <= 1e-12 * std::max(1.0, op_norm(r.map.coefficients()));
  r.multiplicativity_residual = basis_multiplicativity_residual(r.map);
  if (r.unital_residual > std::max(tol.hom_tol, 1e-12))
    throw Error(ErrorKind::NotUnital, "representation is not unital: " + std::to_string(r.unital_residual));
  if (r.multiplicativity_residual > tol.hom_tol)
    throw Error(ErrorKind::PreconditionFailed,
                "representation is not multiplicative: " + std::to_string(r.multiplicativity_residual));
  return r;
}

inline Representation identity_representation(const AlgebraPtr& a) {
  return make_representation(a, identity_map(a->space));
}

/// ad_S ∘ π: m ↦ S π(m) S⁻¹.
inline Representation conjugated(const Representation& pi, const Matrix& s, const Tolerances& tol = {}) {
  const Matrix s_inv = s.inverse();
  auto map = LinearOperatorMap::from_function(pi.map.domain(), pi.target_dim(),
                                              [&](const Matrix& m) { return Matrix(s * pi(m) * s_inv); });
  return make_representation(pi.source, std::move(map), tol);
}

/// Σ_k F(a_k)·G(b_k).
inline Matrix psi(const LinearOperatorMap& f, const LinearOperatorMap& g, const TensorElement& u) {
  Matrix s = Matrix::Zero(f.codomain_dim(), g.codomain_dim());
  for (const auto& [a, b] : u.pairs) s += f.apply_projected(a) * g.apply_projected(b);
  return s;
}

struct SimilarityOptions {
  std::optional<double> u_norm;  // ‖u‖_h upper bound; measured when absent
  SearchOptions search = monitor_search();
  Tolerances tol{};
};

struct SimilarityResult {
  Matrix s;
  Matrix s_inv;  // empty when S is numerically singular
  double intertwining_residual = 0.0;
  double s_minus_i = 0.0;
  double sigma_min = 0.0;
  bool invertible = false;
  double u_norm = 0.0;
  double diff_cb = 0.0;  // ‖π₁ − π₂‖_cb upper
  double pi1_cb = 0.0;
  double pi2_cb = 0.0;
  double condition_12 = 0.0;  // ‖u‖·‖π₁−π₂‖_cb·‖π₁‖_cb
  double condition_21 = 0.0;  // ‖u‖·‖π₁−π₂‖_cb·‖π₂‖_cb
  /// "pi1,pi2": S = Ψ_{π₁,π₂}(u); "pi2,pi1": S = Ψ_{π₂,π₁}(u)⁻¹; "none": neither condition held.
  std::string ordering = "none";
  bool sufficient_condition = false;
  bool implication_ok = true;  // condition held ⇒ ‖Ψ − I‖ < 1 and S invertible
  double psi_minus_i = 0.0;    // ‖Ψ − I‖ for the ordering used
  std::string status = "OK";   // OK or NotInvertible
};

/// S with π₁(m)·S = S·π₂(m) for all m in the source algebra.
inline SimilarityResult build_similarity(const Representation& pi1, const Representation& pi2, const TensorElement& u,
                                         const SimilarityOptions& opt = {}) {
  if (pi1.source->ambient_dim() != pi2.source->ambient_dim() || pi1.source->dim() != pi2.source->dim() ||
      (pi1.map.domain().onb_columns() - pi2.map.domain().onb_columns()).norm() > 1e-10)
    throw Error(ErrorKind::SourceMismatch, "representations have different sources");
  if (pi1.target_dim() != pi2.target_dim())
    throw Error(ErrorKind::SourceMismatch, "representations act on different spaces");
  if (u.ambient_dim() != pi1.source->ambient_dim() || u.algebra->dim() != pi1.source->dim() ||
      (u.algebra->space.onb_columns() - pi1.source->space.onb_columns()).norm() > 1e-10)
    throw Error(ErrorKind::SourceMismatch, "diagonal is not over the source algebra");
  const Tolerances& tol = opt.tol;
  const int level = pi1.target_dim();
  SimilarityResult r;
  r.u_norm = opt.u_norm ? *opt.u_norm : h_norm_interval(u, opt.search).upper;
  r.diff_cb = op_norm_interval(pi1.map - pi2.map, level, opt.search).upper;
  r.pi1_cb = op_norm_interval(pi1.map, level, opt.search).upper;
  r.pi2_cb = op_norm_interval(pi2.map, level, opt.search).upper;
  r.condition_12 = r.u_norm * r.diff_cb * r.pi1_cb;
  r.condition_21 = r.u_norm * r.diff_cb * r.pi2_cb;
  const Matrix id = identity(level);

  const Matrix s12 = psi(pi1.map, pi2.map, u);
  if (r.condition_12 < 1.0) {
    r.ordering = "pi1,pi2";
    r.sufficient_condition = true;
    r.s = s12;
    r.psi_minus_i = op_norm(s12 - id);
  } else if (r.condition_21 < 1.0) {
    r.ordering = "pi2,pi1";
    r.sufficient_condition = true;
    const Matrix s21 = psi(pi2.map, pi1.map, u);
    r.psi_minus_i = op_norm(s21 - id);
    const RealVector sv = singular_values(s21);
    r.s = sv(sv.size() - 1) > tol.inv_tol ? Matrix(s21.inverse()) : s12;
  } else {
    r.s = s12;
    r.psi_minus_i = op_norm(s12 - id);
  }
  const RealVector sv = singular_values(r.s);
  r.sigma_min = sv(sv.size() - 1);
  r.invertible = r.sigma_min > tol.inv_tol;
  if (r.invertible) r.s_inv = r.s.inverse();
  else r.status = "NotInvertible";
  r.s_minus_i = op_norm(r.s - id);
  for (const Matrix& m : pi1.source->space.hs_orthonormal_basis())
    r.intertwining_residual = std::max(r.intertwining_residual, op_norm(pi1(m) * r.s - r.s * pi2(m)));
  r.intertwining_residual /= std::max(1.0, op_norm(r.s));
  if (r.sufficient_condition) r.implication_ok = r.psi_minus_i < 1.0 && r.invertible;
  return r;
}

/// m ↦ x m − m x on the algebra.
inline LinearOperatorMap inner_derivation(const Matrix& x, const OperatorAlgebra& a) {
  if (x.rows() != a.ambient_dim() || x.cols() != a.ambient_dim())
    throw Error(ErrorKind::DimensionMismatch, "inner_derivation: wrong shape");
  return LinearOperatorMap::from_function(a.space, a.ambient_dim(),
                                          [&](const Matrix& m) { return Matrix(x * m - m * x); });
}

struct DerivationSolution {
  Matrix phi;
  double leibniz_residual = 0.0;
  double reconstruction_residual = 0.0;  // max over basis ‖φπ(m) − π(m)φ − D(m)‖
  double phi_norm = 0.0;
  double u_norm = 0.0;
  double d_cb = 0.0;
  double pi_cb = 0.0;
  double bound = 0.0;  // ‖u‖_h·‖D‖_cb·‖π‖_cb
  bool bound_ok = true;
};

/// φ = Σ_k D(a_k)·π(b_k), which implements D as φπ(m) − π(m)φ.
inline DerivationSolution solve_derivation(const LinearOperatorMap& d, const TensorElement& u, const Representation& pi,
                                           const SimilarityOptions& opt = {}) {
  if (d.codomain_dim() != pi.target_dim() || d.domain().dim() != pi.source->dim())
    throw Error(ErrorKind::SourceMismatch, "derivation and representation do not match");
  DerivationSolution out;
  const auto& q = pi.source->space.hs_orthonormal_basis();
  double scale = 1.0;
  for (const auto& m : q) scale = std::max(scale, op_norm(d.apply_projected(m)));
  for (const auto& m : q)
    for (const auto& n : q) {
      const Matrix lhs = d.apply_projected(m * n);
      const Matrix rhs = d.apply_projected(m) * pi(n) + pi(m) * d.apply_projected(n);
      out.leibniz_residual = std::max(out.leibniz_residual, op_norm(lhs - rhs));
    }
  if (out.leibniz_residual > 1e-10 * scale)
    throw Error(ErrorKind::NotADerivation, "Leibniz residual " + std::to_string(out.leibniz_residual));

  out.phi = psi(d, pi.map, u);
  for (const auto& m : q) {
    const Matrix pm = pi(m);
    out.reconstruction_residual =
        std::max(out.reconstruction_residual, op_norm(out.phi * pm - pm * out.phi - d.apply_projected(m)));
  }
  const int level = pi.target_dim();
  out.phi_norm = op_norm(out.phi);
  out.u_norm = opt.u_norm ? *opt.u_norm : h_norm_interval(u, opt.search).upper;
  out.d_cb = op_norm_interval(d, level, opt.search).upper;
  out.pi_cb = op_norm_interval(pi.map, level, opt.search).upper;
  out.bound = out.u_norm * out.d_cb * out.pi_cb;
  out.bound_ok = out.phi_norm <= out.bound + 1e-9;
  return out;
}

/// dist(x, A′) in operator norm.
inline NormInterval commutant_distance(const Matrix& x, const OperatorAlgebra& a, const Tolerances& tol = {}) {
  return dist_to_subspace(x, commutant(a), tol).interval;
}

struct CommutantBoundCheck {
  NormInterval distance;
  double u_norm = 0.0;
  double derivation_cb = 0.0;  // ‖δ(x)|_A‖_cb upper
  double bound = 0.0;
  bool holds = true;
};

/// dist(x, A′) ≤ ‖u‖·‖δ(x)|_A‖ for a virtual diagonal u of A.
inline CommutantBoundCheck commutant_bound_check(const Matrix& x, const AlgebraPtr& a, const TensorElement& u,
                                                 const SimilarityOptions& opt = {}) {
  CommutantBoundCheck c;
  c.distance = commutant_distance(x, *a, opt.tol);
  c.u_norm = opt.u_norm ? *opt.u_norm : h_norm_interval(u, opt.search).upper;
  c.derivation_cb = op_norm_interval(inner_derivation(x, *a), a->ambient_dim(), opt.search).upper;
  c.bound = c.u_norm * c.derivation_cb;
  c.holds = c.distance.lower <= c.bound + opt.tol.dist_tol;
  return c;
}

}  // namespace kkpert
