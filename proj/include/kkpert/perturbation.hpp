#pragma once

// Near inclusions and the Kadison–Kastler distance between subspaces of M_K,
// the cb near-inclusion check through a virtual diagonal, and random perturbed pairs.

#include <optional>
#include <string>
#include <vector>

#include "kkpert/distance.hpp"
#include "kkpert/htensor.hpp"

namespace kkpert {

namespace detail {

inline bool space_contained(const OperatorSpace& e, const OperatorSpace& f, double tol) {
  for (const Matrix& q : e.hs_orthonormal_basis())
    if (f.residual_op(q) > tol) return false;
  return true;
}

/// x ↦ x − P_F x on E. Its level-n norm bounds dist(x, M_n(F)) over the unit ball.
inline LinearOperatorMap projection_residual_map(const OperatorSpace& e, const OperatorSpace& f) {
  return LinearOperatorMap::from_function(e, e.ambient_dim(),
                                          [&](const Matrix& x) { return Matrix(x - f.project(x)); });
}

struct DirectedSearch {
  double value = 0.0;
  Matrix argmax;
  bool converged = true;
  int sdp_solves = 0;
};

/// Phase-aligned G with ‖G‖₁ = 1 and Re⟨G, x⟩ = |⟨W, x⟩|/‖W‖₁.
inline Matrix aligned_functional(const Matrix& w, const Matrix& x) {
  const double n1 = nuclear_norm(w);
  const Complex z = hs_inner(w, x);
  if (n1 <= 1e-300 || std::abs(z) <= 1e-300) return Matrix::Zero(w.rows(), w.cols());
  return w * (z / std::abs(z)) / n1;
}

/// Maximizes x ↦ dist(x, target) over the unit ball of M_n(E). The distance is convex in x,
/// so any certified functional G ⊥ M_n(F) with ‖G‖₁ = 1 is a linear minorant, and the LMO
/// maximizes it. The cheap phase uses the Hilbert–Schmidt residual x − P_F x together with
/// the previous functional; the best point is then polished with barrier-SDP certificates.
/// `to_ball` switches the polish to the unit ball of M_n(F).
inline DirectedSearch directed_ascent(const OperatorSpace& e, const OperatorSpace& f, int n, bool to_ball,
                                      const SearchOptions& opt, const Tolerances& tol,
                                      const std::vector<Matrix>& seeds, std::uint64_t salt, int polish = 6) {
  const int big = n * e.ambient_dim();
  DirectedSearch best;
  best.argmax = Matrix::Zero(big, big);
  best.value = -1.0;
  Matrix best_g = Matrix::Zero(big, big);
  const int total = static_cast<int>(seeds.size()) + opt.starts;
  for (int s = 0; s < total; ++s) {
    Matrix x;
    if (s < static_cast<int>(seeds.size())) {
      x = seeds[static_cast<std::size_t>(s)];
    } else {
      CounterRng rng(opt.seed, stream_id(n, s, salt));
      x = random_ball_point(e, n, rng);
    }
    Matrix g = aligned_functional(x - f.project(x, n), x);
    double v = hs_inner(g, x).real();
    bool done = false;
    for (int it = 0; it < opt.iterations && !done; ++it) {
      const Matrix x_new = unit_ball_lmo(e, g, n);
      Matrix g_new = aligned_functional(x_new - f.project(x_new, n), x_new);
      double v_new = hs_inner(g_new, x_new).real();
      const double carried = std::abs(hs_inner(g, x_new));
      if (carried > v_new) {
        g_new = aligned_functional(g, x_new);
        v_new = carried;
      }
      const double gain = v_new - v;
      if (gain > 0.0) {
        x = x_new;
        g = g_new;
        v = v_new;
      }
      if (gain <= opt.plateau * std::max(1.0, v)) done = true;
    }
    if (!done) best.converged = false;
    if (v > best.value) {
      best.value = v;
      best.argmax = x;
      best_g = g;
    }
    if (opt.target > 0.0 && best.value >= opt.target * (1.0 - 1e-12)) break;
  }

  auto solve = [&](const Matrix& x) {
    ++best.sdp_solves;
    return to_ball ? dist_to_unit_ball(x, f, tol) : dist_to_subspace(x, f, tol);
  };
  Matrix x = best.argmax;
  DistanceResult d = solve(x);
  best.value = std::max(best.value, d.interval.lower);
  for (int it = 0; it < polish; ++it) {
    const Matrix g = to_ball ? d.certificate : aligned_functional(d.certificate, x);
    const Matrix x_new = unit_ball_lmo(e, g, n);
    DistanceResult d_new = solve(x_new);
    const double gain = d_new.interval.lower - best.value;
    if (gain > 0.0) {
      x = x_new;
      d = std::move(d_new);
      best.value = d.interval.lower;
      best.argmax = x;
    }
    if (gain <= opt.plateau * std::max(1.0, best.value)) break;
  }
  best.value = std::max(best.value, 0.0);
  return best;
}

inline void check_same_ambient(const OperatorSpace& e, const OperatorSpace& f) {
  if (e.ambient_dim() != f.ambient_dim()) throw Error(ErrorKind::DimensionMismatch, "spaces have different ambients");
}

}  // namespace detail

/// Search settings for near-inclusion suprema. Each evaluation is a distance solve, so
/// the defaults are lighter than those of norm searches.
inline SearchOptions inclusion_search(std::uint64_t seed = 0) {
  SearchOptions o;
  o.starts = 8;
  o.iterations = 200;
  o.plateau = 1e-9;
  o.seed = seed;
  return o;
}

/// Interval for sup over the unit ball of M_n(E) of dist(x, M_n(F)).
///
/// The upper bound is the smallest of: the caller's analytic value, the norm bound on
/// x ↦ x − P_F x, and (multi-matrix E only) the extreme-point search value.
/// `seeds` are level-n points of the unit ball tried before random starts. `polish` caps the
/// barrier-SDP refinements of the best point; negative means 6 when nK ≤ 6 and 1 otherwise.
inline NormInterval near_inclusion_gamma(const OperatorSpace& e, const OperatorSpace& f, int n,
                                         const SearchOptions& opt = inclusion_search(), const Tolerances& tol = {},
                                         std::optional<double> analytic_upper = std::nullopt,
                                         const std::vector<Matrix>& seeds = {}, int polish = -1) {
  detail::check_same_ambient(e, f);
  if (n < 1) throw Error(ErrorKind::OutOfRange, "level must be >= 1");
  NormInterval out;
  if (detail::space_contained(e, f, tol.mem_tol)) {
    double r = 0.0;
    for (const Matrix& q : e.hs_orthonormal_basis()) r += f.residual_op(q);
    out.lower = 0.0;
    out.upper = r * std::sqrt(static_cast<double>(n * e.ambient_dim()));
    out.tag("contained");
    out.level_lower.push_back(0.0);
    return out;
  }
  if (polish < 0) polish = n * e.ambient_dim() <= 6 ? 6 : 1;
  const auto res = detail::directed_ascent(e, f, n, false, opt, tol, seeds, 0x5EA, polish);
  out.lower = res.value;
  out.witnesses.push_back(res.argmax);
  out.converged = res.converged;
  out.tag("multistart");
  const NormInterval pr = op_norm_interval(detail::projection_residual_map(e, f), n, monitor_search(opt.seed));
  out.upper = std::max(out.lower, pr.upper);
  out.tag("projection-residual");
  if (e.is_multi_matrix()) {
    out.upper = out.lower;
    out.tag("extreme-point-search");
  }
  if (analytic_upper && *analytic_upper < out.upper) {
    out.upper = std::max(out.lower, *analytic_upper);
    out.tag("analytic");
  }
  out.level_lower.push_back(out.lower);
  return out;
}

struct KkDistance {
  NormInterval interval;
  NormInterval e_to_f;  // sup over B_E of dist(x, B_F)
  NormInterval f_to_e;
};

/// Hausdorff distance between the unit balls of E and F in operator norm.
///
/// dist(x, B_F) ≤ 2·dist(x, F) for ‖x‖ ≤ 1 (scale the nearest point of F into the ball),
/// which turns the directed near-inclusion upper bounds into upper bounds here.
inline KkDistance kk_distance_interval(const OperatorSpace& e, const OperatorSpace& f,
                                       const SearchOptions& opt = inclusion_search(), const Tolerances& tol = {},
                                       std::optional<double> analytic_upper = std::nullopt) {
  detail::check_same_ambient(e, f);
  KkDistance out;
  auto directed = [&](const OperatorSpace& a, const OperatorSpace& b, std::uint64_t salt) {
    NormInterval iv;
    if (detail::space_contained(a, b, tol.mem_tol) && detail::space_contained(b, a, tol.mem_tol) &&
        a.dim() == b.dim()) {
      iv.lower = 0.0;
      iv.upper = 0.0;
      iv.tag("equal");
      return iv;
    }
    const auto res = detail::directed_ascent(a, b, 1, true, opt, tol, {}, salt);
    iv.lower = res.value;
    iv.witnesses.push_back(res.argmax);
    iv.converged = res.converged;
    iv.tag("multistart");
    const NormInterval sub = near_inclusion_gamma(a, b, 1, opt, tol);
    iv.lower = std::max(iv.lower, sub.lower);
    iv.upper = std::max(iv.lower, std::min(2.0, 2.0 * sub.upper));
    iv.tag("twice-subspace-gap");
    return iv;
  };
  out.e_to_f = directed(e, f, 0xB1);
  out.f_to_e = directed(f, e, 0xB2);
  out.interval.lower = std::max(out.e_to_f.lower, out.f_to_e.lower);
  out.interval.upper = std::max(out.e_to_f.upper, out.f_to_e.upper);
  out.interval.converged = out.e_to_f.converged && out.f_to_e.converged;
  out.interval.tag("hausdorff");
  if (analytic_upper && *analytic_upper < out.interval.upper) {
    out.interval.upper = std::max(out.interval.lower, *analytic_upper);
    out.interval.tag("analytic");
  }
  return out;
}

struct LevelMargin {
  int level = 0;
  NormInterval gamma;  // near inclusion of M_n(M) in M_n(N)
  double margin = 0.0;  // bound − gamma.lower
  bool ok = true;
};

struct CbInclusionReport {
  double gamma = 0.0;  // level-1 near-inclusion value used in the bound
  std::string gamma_source;
  double u_norm = 0.0;
  double bound = 0.0;  // 4‖u‖γ
  std::vector<LevelMargin> levels;
  bool passed = true;
};

/// Checks that M ⊆^γ N lifts to every level with constant 4‖u_M‖γ.
/// γ is the caller's value when given; otherwise the measured level-1 upper bound.
inline CbInclusionReport cb_near_inclusion_check(const OperatorAlgebra& m, const OperatorAlgebra& n,
                                                 const TensorElement& u_m, const std::vector<int>& levels,
                                                 std::optional<double> gamma = std::nullopt,
                                                 std::optional<double> u_norm = std::nullopt,
                                                 const SearchOptions& opt = inclusion_search(),
                                                 const Tolerances& tol = {}) {
  detail::check_same_ambient(m.space, n.space);
  CbInclusionReport rep;
  rep.u_norm = u_norm ? *u_norm : h_norm_interval(u_m, opt).upper;
  if (gamma) {
    rep.gamma = *gamma;
    rep.gamma_source = "caller";
  } else {
    rep.gamma = near_inclusion_gamma(m.space, n.space, 1, opt, tol).upper;
    rep.gamma_source = "measured";
  }
  rep.bound = 4.0 * rep.u_norm * rep.gamma;
  std::vector<int> sorted = levels;
  std::sort(sorted.begin(), sorted.end());
  Matrix prev, first;
  for (int lv : sorted) {
    LevelMargin lm;
    lm.level = lv;
    std::vector<Matrix> seeds;
    if (prev.size() > 0 && first.size() > 0) {
      const int from = static_cast<int>(prev.rows()) / m.ambient_dim();
      Matrix s = prev;
      for (int k = from; k < lv; ++k) s = direct_sum(s, first);
      seeds.push_back(s);
    }
    lm.gamma = near_inclusion_gamma(m.space, n.space, lv, opt, tol, std::nullopt, seeds);
    // Compressing to the leading corner maps M_n(N) into M_{n−1}(N) contractively, so the
    // warm seed keeps at least the previous level's value.
    if (!seeds.empty() && !rep.levels.empty() && lm.gamma.lower < rep.levels.back().gamma.lower) {
      lm.gamma.lower = rep.levels.back().gamma.lower;
      lm.gamma.upper = std::max(lm.gamma.upper, lm.gamma.lower);
      lm.gamma.witnesses.assign(1, seeds.front());
      lm.gamma.tag("level-monotone");
    }
    if (!lm.gamma.witnesses.empty()) {
      prev = lm.gamma.witnesses.front();
      if (lv == 1) first = prev;
    } else {
      prev = Matrix();
    }
    lm.margin = rep.bound - lm.gamma.lower;
    lm.ok = lm.margin >= -tol.audit_tol;
    rep.passed = rep.passed && lm.ok;
    rep.levels.push_back(std::move(lm));
  }
  return rep;
}

struct PerturbationInstance {
  AlgebraPtr n;
  Matrix s0;
  Matrix s0_inv;
  AlgebraPtr m;  // S0·N·S0⁻¹
  double gamma_analytic = 0.0;
  double condition_number = 1.0;
  double s0_minus_i = 0.0;
  TensorElement u_n;
  TransportResult u_m;
  std::vector<int> block_sizes;
  double t = 0.0;
  std::uint64_t seed = 0;
  int resamples = 0;
  std::string generator;
};

/// The pair (N, S0·N·S0⁻¹) with the analytic bound d ≤ 2(1 + ‖S0‖‖S0⁻¹‖)‖S0 − I‖.
inline PerturbationInstance make_instance(const AlgebraPtr& n, const Matrix& s0, const Tolerances& tol = {},
                                          const SearchOptions& opt = monitor_search()) {
  const int k = n->ambient_dim();
  if (s0.rows() != k || s0.cols() != k) throw Error(ErrorKind::DimensionMismatch, "S0 has the wrong shape");
  PerturbationInstance inst;
  inst.n = n;
  inst.s0 = s0;
  const RealVector sv = singular_values(s0);
  if (sv(sv.size() - 1) <= tol.rank_tol) throw Error(ErrorKind::Singular, "S0 is not invertible");
  inst.s0_inv = s0.inverse();
  inst.condition_number = sv(0) / sv(sv.size() - 1);
  inst.s0_minus_i = op_norm(s0 - identity(k));
  inst.gamma_analytic = 2.0 * (1.0 + inst.condition_number) * inst.s0_minus_i;
  inst.m = conjugate_algebra(*n, s0, inst.s0_inv, tol);
  inst.u_n = canonical_diagonal_element(n);
  inst.u_m = transport_diagonal(inst.u_n, s0, inst.m, tol, opt);
  return inst;
}

/// N = ⊕ M_{n_i} (padded by a scalar block), S0 = I + t·X with X complex Gaussian scaled to
/// ‖X‖ = 1. X is resampled until cond(S0) ≤ (1 + t)/(1 − t) (always true for t < 1) or,
/// for t ≥ 1, until S0 is invertible.
inline PerturbationInstance generate_instance(const std::vector<int>& block_sizes, int ambient_dim, double t,
                                              std::uint64_t seed, const Tolerances& tol = {},
                                              const SearchOptions& opt = monitor_search()) {
  if (!(t >= 0.0)) throw Error(ErrorKind::OutOfRange, "perturbation size must be nonnegative");
  const AlgebraPtr n = block_diagonal_algebra(block_sizes, ambient_dim);
  Matrix s0 = identity(ambient_dim);
  int resamples = 0;
  if (t > 0.0) {
    for (;; ++resamples) {
      if (resamples > 1000) throw Error(ErrorKind::Singular, "could not sample an invertible S0");
      CounterRng rng(seed, 0x1457 + static_cast<std::uint64_t>(resamples));
      Matrix x = rng.gaussian_matrix(ambient_dim, ambient_dim);
      x /= op_norm(x);
      s0 = identity(ambient_dim) + t * x;
      const RealVector sv = singular_values(s0);
      const double smin = sv(sv.size() - 1);
      if (smin <= tol.inv_tol) continue;
      if (t < 1.0 && sv(0) / smin > (1.0 + t) / (1.0 - t) * (1.0 + 1e-12)) continue;
      break;
    }
  }
  PerturbationInstance inst = make_instance(n, s0, tol, opt);
  inst.block_sizes = block_sizes;
  inst.t = t;
  inst.seed = seed;
  inst.resamples = resamples;
  inst.generator = CounterRng(seed, 0).name();
  return inst;
}

}  // namespace kkpert
