#pragma once

// Correction of an almost multiplicative map into a homomorphism:
// L ← L + R with R(m) = Σ_k L(a_k)·(L(b_k m) − L(b_k)L(m)) for a virtual diagonal u.

#include <optional>
#include <string>
#include <vector>

#include "kkpert/htensor.hpp"

namespace kkpert {

/// R(m) = Σ_k L(a_k)·L^∨(b_k, m).
inline LinearOperatorMap johnson_step(const LinearOperatorMap& l, const TensorElement& u) {
  const OperatorSpace& dom = l.domain();
  if (u.ambient_dim() != dom.ambient_dim())
    throw Error(ErrorKind::DimensionMismatch, "johnson_step: diagonal and map live over different ambients");
  if (!detail::contains_identity(dom)) throw Error(ErrorKind::NotUnital, "johnson_step: domain is not unital");
  std::vector<Matrix> la, lb;
  for (const auto& [a, b] : u.pairs) {
    la.push_back(l.apply_projected(a));
    lb.push_back(l.apply_projected(b));
  }
  return LinearOperatorMap::from_function(dom, l.codomain_dim(), [&](const Matrix& m) {
    const Matrix lm = l.apply_projected(m);
    Matrix r = Matrix::Zero(l.codomain_dim(), l.codomain_dim());
    for (std::size_t k = 0; k < u.pairs.size(); ++k) r += la[k] * (l.apply_projected(u.pairs[k].second * m) - lb[k] * lm);
    return r;
  });
}

struct ScheduleRecord {
  int q = 0;
  double mu_q = 0.0;
  double delta_q = 0.0;
  double defect_measured = 0.0;  // max(basis residual, level-K search) for L^q
  double basis_residual = 0.0;
  double step_norm_lower = 0.0;  // ‖R^q‖ at level K
  double step_norm_upper = 0.0;
  bool dominated = true;        // defect_measured ≤ δ_q + sched_tol
  double quadratic_bound = 0.0;  // (2‖u‖ + ‖u‖²μ_q²)·defect_q², compared with defect_{q+1}
};

struct IterationSchedule {
  double mu = 1.0;
  double delta = 0.0;
  double eps = 0.0;
  double u_norm = 1.0;
  double defect_bound = 0.0;  // the value compared against δ in the precondition
  std::string defect_bound_source;
  bool heuristic = false;  // precondition held only for the measured lower bound
  double unital_residual = 0.0;
  std::vector<ScheduleRecord> records;
  int iterations = 0;
  bool converged = false;
  double step_sum_upper = 0.0;
  double final_bound = 0.0;      // 4‖u‖μδ
  double truncation_tail = 0.0;  // 2‖u‖μδ_q at the stopping step
  NormInterval pi_minus_l;
  double final_basis_residual = 0.0;
  double final_defect_lower = 0.0;
  double pi_unit_residual = 0.0;
  bool schedule_dominated = true;
  bool quadratic_ok = true;
};

struct JohnsonOptions {
  double eps = 0.1;
  int max_iter = 60;
  std::optional<double> mu;            // ‖L‖_cb upper bound; measured when absent
  std::optional<double> defect_upper;  // ‖L^∨‖_cb upper bound; analytic bound when absent
  std::optional<double> u_norm;        // ‖u‖_h upper bound; measured when absent
  bool allow_heuristic = true;
  SearchOptions search = monitor_search();
  Tolerances tol{};
};

enum class JohnsonStatus { Converged, PreconditionFailed, MaxIterExceeded };

inline const char* to_string(JohnsonStatus s) {
  switch (s) {
    case JohnsonStatus::Converged: return "Converged";
    case JohnsonStatus::PreconditionFailed: return "PreconditionFailed";
    case JohnsonStatus::MaxIterExceeded: return "MaxIterExceeded";
  }
  return "?";
}

struct JohnsonResult {
  LinearOperatorMap pi;
  IterationSchedule schedule;
  JohnsonStatus status = JohnsonStatus::Converged;
  std::string message;
};

namespace detail {

inline double level_defect_lower(const LinearOperatorMap& l, int level, const SearchOptions& opt) {
  return defect_hcb_interval(l, level, opt).lower;
}

inline NormInterval map_norm_at(const LinearOperatorMap& t, int level, const SearchOptions& opt) {
  return op_norm_interval(t, level, opt);
}

}  // namespace detail

/// Runs the iteration with the proof's schedule δ = ε/(4‖u‖ + 8μ²‖u‖²), μ_q = (2 − 2^{−q})μ,
/// δ_q = 2^{−q}δ, stopping once the measured defect and the step norm are both ≤ hom_tol.
inline JohnsonResult try_homomorphize(const LinearOperatorMap& l0, const TensorElement& u,
                                      const JohnsonOptions& opt = {}) {
  const Tolerances& tol = opt.tol;
  const int level = l0.codomain_dim();
  const int k = l0.domain().ambient_dim();
  JohnsonResult res;
  IterationSchedule& sch = res.schedule;
  sch.eps = opt.eps;
  if (!(opt.eps > 0.0)) throw Error(ErrorKind::OutOfRange, "homomorphize: eps must be positive");
  sch.u_norm = opt.u_norm ? *opt.u_norm : h_norm_interval(u, opt.search).upper;
  sch.mu = std::max(1.0, opt.mu ? *opt.mu : detail::map_norm_at(l0, level, opt.search).upper);
  sch.delta = opt.eps / (4.0 * sch.u_norm + 8.0 * sch.mu * sch.mu * sch.u_norm * sch.u_norm);
  sch.final_bound = 4.0 * sch.u_norm * sch.mu * sch.delta;
  const Matrix id_k = identity(k);
  if (l0.codomain_dim() == k) sch.unital_residual = op_norm(l0.apply_projected(id_k) - id_k);
  else sch.unital_residual = kInf;

  // Precondition on ‖L^∨‖_cb.
  if (opt.defect_upper) {
    sch.defect_bound = *opt.defect_upper;
    sch.defect_bound_source = "caller";
  } else if (l0.codomain_dim() == k) {
    const double lmi = detail::map_norm_at(l0 - identity_map(l0.domain()), level, opt.search).upper;
    sch.defect_bound = *analytic_defect_bound(sch.mu, lmi);
    sch.defect_bound_source = "analytic:(2+|L|cb)|L-id|cb";
  } else {
    sch.defect_bound = kInf;
    sch.defect_bound_source = "none";
  }
  // The relative slack absorbs rounding when the caller's bound is defined as δ itself.
  if (sch.defect_bound > sch.delta * (1.0 + 1e-12)) {
    const double measured = std::max(basis_multiplicativity_residual(l0), detail::level_defect_lower(l0, level, opt.search));
    if (measured <= sch.delta && opt.allow_heuristic) {
      sch.heuristic = true;
    } else {
      res.pi = l0;
      res.status = JohnsonStatus::PreconditionFailed;
      res.message = "defect bound " + std::to_string(sch.defect_bound) + " exceeds delta " + std::to_string(sch.delta);
      return res;
    }
  }

  LinearOperatorMap l = l0;
  for (int q = 0;; ++q) {
    ScheduleRecord rec;
    rec.q = q;
    rec.mu_q = (2.0 - std::ldexp(1.0, -q)) * sch.mu;
    rec.delta_q = std::ldexp(sch.delta, -q);
    rec.basis_residual = basis_multiplicativity_residual(l);
    SearchOptions so = opt.search;
    so.seed = opt.search.seed + static_cast<std::uint64_t>(q);
    rec.defect_measured = std::max(rec.basis_residual, detail::level_defect_lower(l, level, so));
    rec.dominated = rec.defect_measured <= rec.delta_q + tol.sched_tol;
    rec.quadratic_bound =
        (2.0 * sch.u_norm + sch.u_norm * sch.u_norm * rec.mu_q * rec.mu_q) * rec.defect_measured * rec.defect_measured;
    if (!sch.records.empty()) {
      const double allowed = sch.records.back().quadratic_bound + tol.sched_tol;
      if (rec.defect_measured > allowed) sch.quadratic_ok = false;
    }
    sch.schedule_dominated = sch.schedule_dominated && (sch.heuristic || rec.dominated);

    const LinearOperatorMap r = johnson_step(l, u);
    const NormInterval rn = detail::map_norm_at(r, level, so);
    rec.step_norm_lower = rn.lower;
    rec.step_norm_upper = rn.upper;
    sch.records.push_back(rec);

    if (rec.defect_measured <= tol.hom_tol && rec.step_norm_upper <= tol.hom_tol) {
      // The final correction (norm ≤ hom_tol) is applied but not counted as an iteration.
      l = l + r;
      sch.step_sum_upper += rn.upper;
      sch.converged = true;
      sch.truncation_tail = 2.0 * sch.u_norm * sch.mu * rec.delta_q;
      break;
    }
    if (q >= opt.max_iter) break;
    l = l + r;
    sch.step_sum_upper += rn.upper;
    sch.iterations = q + 1;
  }

  sch.final_basis_residual = basis_multiplicativity_residual(l);
  sch.final_defect_lower = std::max(sch.final_basis_residual, detail::level_defect_lower(l, level, opt.search));
  if (l.codomain_dim() == k) sch.pi_unit_residual = op_norm(l.apply_projected(id_k) - id_k);
  sch.pi_minus_l = detail::map_norm_at(l - l0, level, opt.search);
  res.pi = l;
  if (!sch.converged) {
    res.status = JohnsonStatus::MaxIterExceeded;
    res.message = "defect " + std::to_string(sch.records.back().defect_measured) + " after " +
                  std::to_string(sch.iterations) + " iterations";
  }
  return res;
}

/// As try_homomorphize, but precondition failures and stalls are raised as errors.
inline std::pair<LinearOperatorMap, IterationSchedule> homomorphize(const LinearOperatorMap& l,
                                                                    const TensorElement& u,
                                                                    const JohnsonOptions& opt = {}) {
  JohnsonResult r = try_homomorphize(l, u, opt);
  if (r.status == JohnsonStatus::PreconditionFailed) throw Error(ErrorKind::PreconditionFailed, r.message);
  if (r.status == JohnsonStatus::MaxIterExceeded) throw Error(ErrorKind::MaxIterExceeded, r.message);
  return {std::move(r.pi), std::move(r.schedule)};
}

}  // namespace kkpert
