#pragma once

// Operator and completely bounded norm intervals for linear maps, and the
// multiplicativity defect L(xy) − L(x)L(y) with its matrix-level norm.

#include <optional>
#include <string>
#include <vector>

#include "kkpert/interval.hpp"
#include "kkpert/linear_map.hpp"

namespace kkpert {

namespace detail {

inline bool contains_identity(const OperatorSpace& e) {
  return e.residual_op(identity(e.ambient_dim())) <= 1e-9;
}

/// A maximizer of Re⟨G, X⟩ over the unit ball of M_n(E). On a multi-matrix E this
/// is the block-wise polar unitary. Otherwise the better of two normalized candidates
/// is returned.
inline Matrix unit_ball_lmo(const OperatorSpace& e, const Matrix& g, int n) {
  const Matrix pg = e.project(g, n);
  if (const auto& bs = e.block_structure()) {
    auto comps = bs->components(pg, n);
    for (auto& c : comps) c = polar_unitary(c);
    return bs->assemble(comps, n);
  }
  Matrix best = Matrix::Zero(g.rows(), g.cols());
  double best_val = 0.0;
  for (const Matrix& cand : {Matrix(e.project(polar_unitary(g), n)), pg}) {
    const double nc = op_norm(cand);
    if (nc <= 1e-300) continue;
    const double val = hs_inner(g, cand).real() / nc;
    if (val > best_val) {
      best_val = val;
      best = cand / nc;
    }
  }
  return best;
}

inline Matrix random_ball_point(const OperatorSpace& e, int n, CounterRng& rng) {
  const int big = n * e.ambient_dim();
  return unit_ball_lmo(e, rng.gaussian_matrix(big, big), n);
}

inline std::uint64_t stream_id(int level, int start, std::uint64_t salt = 0) {
  return (static_cast<std::uint64_t>(level) << 40) ^ (static_cast<std::uint64_t>(start) << 8) ^ salt;
}

struct AscentOutcome {
  double value = 0.0;
  Matrix argmax;
  bool converged = true;
};

/// Monotone ascent of X ↦ ‖T_n(X)‖ over the unit ball of M_n(domain): the top singular
/// pair (ξ, η) of T_n(X) gives the linear minorant Re⟨T_n†(ξη*), ·⟩, which the LMO maximizes.
inline AscentOutcome map_norm_ascent(const LinearOperatorMap& t, int n, const SearchOptions& opt,
                                     const std::vector<Matrix>& seeds) {
  const OperatorSpace& e = t.domain();
  AscentOutcome best;
  best.argmax = Matrix::Zero(n * e.ambient_dim(), n * e.ambient_dim());
  best.value = -1.0;
  const int total = static_cast<int>(seeds.size()) + opt.starts;
  for (int s = 0; s < total; ++s) {
    Matrix x;
    if (s < static_cast<int>(seeds.size())) {
      x = seeds[static_cast<std::size_t>(s)];
    } else {
      CounterRng rng(opt.seed, stream_id(n, s, 0xA5));
      x = random_ball_point(e, n, rng);
    }
    SingularPair sp = top_singular_pair(t.apply_level(x, n));
    double f = sp.value;
    bool done = false;
    for (int it = 0; it < opt.iterations && !done; ++it) {
      const Matrix g = t.adjoint_level(sp.left * sp.right.adjoint(), n);
      const Matrix x_new = unit_ball_lmo(e, g, n);
      const SingularPair sp_new = top_singular_pair(t.apply_level(x_new, n));
      const double gain = sp_new.value - f;
      if (gain > 0.0) {
        x = x_new;
        sp = sp_new;
        f = sp_new.value;
      }
      if (gain <= opt.plateau * std::max(1.0, f)) done = true;
    }
    if (!done) best.converged = false;
    if (f > best.value) {
      best.value = f;
      best.argmax = x;
    }
    if (opt.target > 0.0 && best.value >= opt.target * (1.0 - 1e-12)) break;
  }
  best.value = std::max(best.value, 0.0);
  return best;
}

}  // namespace detail

/// ‖T_n(X)‖ ≤ ‖T_n(X)‖_F ≤ ‖C‖₂·‖X‖_F ≤ ‖C‖₂·√(nK)·‖X‖, with C the coefficient matrix
/// on the orthonormal basis.
inline double relaxation_upper_bound(const LinearOperatorMap& t, int n) {
  return op_norm(t.coefficients()) * std::sqrt(static_cast<double>(n * t.domain().ambient_dim()));
}

/// Interval for the norm of the n-th ampliation over the unit ball of M_n(domain).
inline NormInterval op_norm_interval(const LinearOperatorMap& t, int n, const SearchOptions& opt = {},
                                     std::vector<Matrix> seeds = {}) {
  if (n < 1) throw Error(ErrorKind::OutOfRange, "level must be >= 1");
  const OperatorSpace& e = t.domain();
  if (detail::contains_identity(e)) seeds.insert(seeds.begin(), identity(n * e.ambient_dim()));
  const auto res = detail::map_norm_ascent(t, n, opt, seeds);
  NormInterval out;
  out.lower = res.value;
  out.witnesses.push_back(res.argmax);
  out.converged = res.converged;
  out.tag("multistart");
  if (e.is_multi_matrix()) {
    // Convex in X, so the supremum sits at an extreme point: the search runs over block unitaries.
    out.upper = out.lower;
    out.tag("extreme-point-search");
  } else {
    out.upper = std::max(out.lower, relaxation_upper_bound(t, n));
    out.tag("hs-relaxation");
  }
  out.level_lower.push_back(out.lower);
  return out;
}

/// ‖T‖_cb as the norm at level K' (the codomain dimension). Levels 1..K' are swept with
/// warm starts X_{n−1} ⊕ X_1, so the level lower bounds are nondecreasing.
inline NormInterval cb_norm_interval(const LinearOperatorMap& t, const SearchOptions& opt = {}, int level = -1) {
  const int top = level > 0 ? level : t.codomain_dim();
  NormInterval out;
  Matrix first, prev;
  std::vector<double> lowers;
  for (int n = 1; n <= top; ++n) {
    std::vector<Matrix> seeds;
    if (n > 1) seeds.push_back(direct_sum(prev, first));
    out = op_norm_interval(t, n, opt, seeds);
    prev = out.witnesses.front();
    if (n == 1) first = prev;
    lowers.push_back(out.lower);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < lowers.size(); ++i) monotone = monotone && lowers[i] >= lowers[i - 1] - 1e-12;
  out.level_lower = lowers;
  out.tag("smith-ampliation");
  if (!monotone) out.tag("level-monotonicity-violated");
  return out;
}

/// x ↦ L(xy) − L(x)L(y) on an algebra domain, with its row-column matrix-level extension.
class BilinearDefect {
 public:
  explicit BilinearDefect(LinearOperatorMap base) : base_(std::move(base)) {}

  const LinearOperatorMap& base() const { return base_; }

  Matrix operator()(const Matrix& x, const Matrix& y) const { return level(x, y, 1); }

  /// (L^∨)_n(X, Y) = L_n(XY) − L_n(X)·L_n(Y).
  Matrix level(const Matrix& x, const Matrix& y, int n) const {
    return base_.apply_level(x * y, n) - base_.apply_level(x, n) * base_.apply_level(y, n);
  }

 private:
  LinearOperatorMap base_;
};

/// Requires the domain of `l` to be closed under multiplication.
inline BilinearDefect defect(const LinearOperatorMap& l, const Tolerances& tol = {}) {
  const auto& q = l.domain().hs_orthonormal_basis();
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j)
      if (l.domain().residual_op(q[i] * q[j]) > tol.mem_tol)
        throw Error(ErrorKind::NotClosedUnderMultiplication, "defect: domain is not an algebra");
  return BilinearDefect(l);
}

/// (2 + ‖L‖_cb)·‖L − ι‖_cb from upper bounds, for maps from an algebra into its own ambient
/// matrices (ι the inclusion). Returns nullopt unless both inputs are finite.
inline std::optional<double> analytic_defect_bound(double l_cb_upper, double l_minus_id_cb_upper) {
  if (!std::isfinite(l_cb_upper) || !std::isfinite(l_minus_id_cb_upper)) return std::nullopt;
  return (2.0 + l_cb_upper) * l_minus_id_cb_upper;
}

namespace detail {

/// Alternating ascent of ‖(L^∨)_n(X, Y)‖: in each variable the defect is linear, so the
/// same minorant-plus-LMO step applies with the gradients
///   ∂X: P(W Y*) − L_n†(ξ (L_n(Y)η)*),   ∂Y: P(X* W) − L_n†((L_n(X)*ξ) η*),  W = L_n†(ξη*).
inline NormInterval defect_search(const BilinearDefect& dv, int n, const SearchOptions& opt) {
  const LinearOperatorMap& l = dv.base();
  const OperatorSpace& e = l.domain();
  NormInterval out;
  out.lower = 0.0;
  Matrix bx, by;
  bool converged = true;
  for (int s = 0; s < opt.starts; ++s) {
    CounterRng rng(opt.seed, stream_id(n, s, 0xDEF));
    Matrix x = random_ball_point(e, n, rng);
    Matrix y = random_ball_point(e, n, rng);
    SingularPair sp = top_singular_pair(dv.level(x, y, n));
    double f = sp.value;
    bool done = false;
    for (int it = 0; it < opt.iterations && !done; ++it) {
      const double f_start = f;
      for (int side = 0; side < 2; ++side) {
        const Matrix w = l.adjoint_level(sp.left * sp.right.adjoint(), n);
        Matrix g;
        if (side == 0) {
          const Vector ly_eta = l.apply_level(y, n) * sp.right;
          g = e.project(w * y.adjoint(), n) - l.adjoint_level(sp.left * ly_eta.adjoint(), n);
        } else {
          const Vector lx_xi = l.apply_level(x, n).adjoint() * sp.left;
          g = e.project(x.adjoint() * w, n) - l.adjoint_level(lx_xi * sp.right.adjoint(), n);
        }
        const Matrix cand = unit_ball_lmo(e, g, n);
        const SingularPair sp_new = top_singular_pair(side == 0 ? dv.level(cand, y, n) : dv.level(x, cand, n));
        if (sp_new.value > f) {
          (side == 0 ? x : y) = cand;
          sp = sp_new;
          f = sp_new.value;
        }
      }
      if (f - f_start <= opt.plateau * std::max(1.0, f)) done = true;
    }
    converged = converged && done;
    if (f > out.lower || bx.size() == 0) {
      out.lower = f;
      bx = x;
      by = y;
    }
    if (opt.target > 0.0 && out.lower >= opt.target * (1.0 - 1e-12)) break;
  }
  out.witnesses = {bx, by};
  out.converged = converged;
  out.tag("multistart");
  out.tag("alternating-ascent");
  return out;
}

}  // namespace detail

/// Interval for sup ‖(L^∨)_n(X, Y)‖ over the two unit balls of M_n(A). The lower bound is
/// searched; the upper bound is the caller's analytic bound (or +inf), and the gap between
/// the finite-level value and the bilinear cb norm is flagged.
inline NormInterval defect_hcb_interval(const LinearOperatorMap& l, int n, const SearchOptions& opt = {},
                                        std::optional<double> analytic_upper = std::nullopt) {
  if (n < 1) throw Error(ErrorKind::OutOfRange, "level must be >= 1");
  NormInterval out = detail::defect_search(defect(l), n, opt);
  out.level_lower.push_back(out.lower);
  if (analytic_upper) {
    out.upper = std::max(out.lower, *analytic_upper);
    out.tag("analytic-chain");
  }
  out.tag("bilinear-level-gap");
  return out;
}

/// Largest ‖L(b_i b_j) − L(b_i)L(b_j)‖ over pairs of orthonormal basis elements.
inline double basis_multiplicativity_residual(const LinearOperatorMap& l) {
  const auto& q = l.domain().hs_orthonormal_basis();
  double r = 0.0;
  for (const auto& a : q) {
    const Matrix la = l.apply_projected(a);
    for (const auto& b : q) r = std::max(r, op_norm(l.apply_projected(a * b) - la * l.apply_projected(b)));
  }
  return r;
}

}  // namespace kkpert
