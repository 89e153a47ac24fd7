#pragma once

// End-to-end run: near algebras M, N ⇒ homomorphism π: N → M close to the identity
// and a similarity S with S·M·S⁻¹ = N, with every constant of the proof chain audited.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kkpert/johnson.hpp"
#include "kkpert/perturbation.hpp"
#include "kkpert/similarity.hpp"

namespace kkpert {

/// Largest cb near-inclusion constant of the homomorphism theorem ("γ < 1/164").
inline constexpr double kChainGammaLimit = 1.0 / 164.0;
/// Constant of the similarity theorem: d(M, N) < 1/(656‖u‖) and ‖S − I‖ ≤ 656‖u‖γ.
inline constexpr double kSimilarityConstant = 656.0;
/// Lifting constant of near inclusions to cb near inclusions: γ_cb = 4‖u‖γ.
inline constexpr double kCbLiftConstant = 4.0;

struct ChainAudit {
  double gamma = 0.0;
  double u_norm = 1.0;
  double bound_T_minus_id = 0.0;   // 2γ
  double bound_Tinv = 1.0;         // 1/(1−2γ)
  double bound_V_minus_id = 0.0;   // 2γ/(1−2γ)
  double bound_V1_inv = 1.0;       // (1−2γ)/(1−4γ)
  double bound_L_cb = 1.0;         // 1/(1−4γ)
  double bound_L_minus_id = 0.0;   // 4γ/(1−4γ)
  double bound_L_defect = 0.0;     // 12γ/(1−4γ)²
  double bound_L_inv = 1.0;        // (1−4γ)/(1−8γ)
  double mu = 1.0;
  double delta = 0.0;
  double eps = 0.0;  // δ(4‖u‖ + 8μ²‖u‖²)
  double final_check_1 = 0.0;  // ε + 4γ/(1−4γ)
  double final_check_2 = 0.0;  // ε(1−4γ)/(1−8γ)
  bool feasible_1 = true;
  bool feasible_2 = true;
  bool feasible() const { return feasible_1 && feasible_2; }
};

inline ChainAudit audit_chain(double gamma, double u_norm) {
  if (!(gamma >= 0.0) || !(gamma < 0.125))
    throw Error(ErrorKind::OutOfRange, "audit_chain: gamma must lie in [0, 1/8)");
  if (!(u_norm > 0.0) || !std::isfinite(u_norm)) throw Error(ErrorKind::OutOfRange, "audit_chain: u_norm must be positive");
  ChainAudit a;
  a.gamma = gamma;
  a.u_norm = u_norm;
  const double g2 = 1.0 - 2.0 * gamma, g4 = 1.0 - 4.0 * gamma, g8 = 1.0 - 8.0 * gamma;
  a.bound_T_minus_id = 2.0 * gamma;
  a.bound_Tinv = 1.0 / g2;
  a.bound_V_minus_id = 2.0 * gamma / g2;
  a.bound_V1_inv = g2 / g4;
  a.bound_L_cb = 1.0 / g4;
  a.bound_L_minus_id = 4.0 * gamma / g4;
  a.bound_L_defect = 12.0 * gamma / (g4 * g4);
  a.bound_L_inv = g4 / g8;
  a.mu = a.bound_L_cb;
  a.delta = a.bound_L_defect;
  a.eps = a.delta * (4.0 * u_norm + 8.0 * a.mu * a.mu * u_norm * u_norm);
  a.final_check_1 = a.eps + a.bound_L_minus_id;
  a.final_check_2 = a.bound_L_inv * a.eps;
  a.feasible_1 = a.final_check_1 < 1.0;
  a.feasible_2 = a.final_check_2 < 1.0;
  return a;
}

/// Largest γ for which both final checks are < 1, by bisection on [0, 1/8).
inline double chain_feasibility_threshold(double u_norm, double tol = 1e-15) {
  double lo = 0.0, hi = 0.125;
  if (!audit_chain(0.0, u_norm).feasible()) return 0.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (audit_chain(mid, u_norm).feasible()) lo = mid;
    else hi = mid;
  }
  return lo;
}

/// One measured-versus-analytic inequality of the chain.
struct AuditCheck {
  std::string name;
  double measured = 0.0;  // a lower bound on the quantity
  double measured_upper = kInf;
  double bound = 0.0;
  double margin = 0.0;  // bound − measured
  bool ok = true;
};

enum class Verdict {
  Success,
  ProjectionNotInvertible,
  UnitNotInvertible,
  JohnsonFailed,
  SimilaritySingular,
  ConjugationResidualHigh,
  SimilarityBoundExceeded,
  AuditViolated,
};

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Success: return "SUCCESS";
    case Verdict::ProjectionNotInvertible: return "ProjectionNotInvertible";
    case Verdict::UnitNotInvertible: return "UnitNotInvertible";
    case Verdict::JohnsonFailed: return "JohnsonFailed";
    case Verdict::SimilaritySingular: return "SimilaritySingular";
    case Verdict::ConjugationResidualHigh: return "ConjugationResidualHigh";
    case Verdict::SimilarityBoundExceeded: return "SimilarityBoundExceeded";
    case Verdict::AuditViolated: return "AuditViolated";
  }
  return "?";
}

struct PipelineOptions {
  std::string mode = "certified";  // or "heuristic"
  Tolerances tol{};
  SearchOptions search = monitor_search();
  int johnson_max_iter = 60;
};

struct PipelineReport {
  std::string description;
  std::uint64_t seed = 0;
  std::string mode_requested;
  std::string mode;
  std::string mode_reason;
  bool certified() const { return mode == "certified"; }

  std::optional<double> gamma_analytic;
  double u_m_norm = kInf;  // ‖u_M‖_h upper bound
  bool u_m_certified = false;
  double gamma_cb = 0.0;  // 4‖u_M‖γ, the constant fed to the chain
  std::string gamma_source;
  std::optional<ChainAudit> audit;
  double gamma_star = 0.0;  // feasibility threshold at ‖u_N‖
  double u_n_norm = 1.0;
  std::vector<AuditCheck> checks;
  std::vector<std::string> log;

  double t_condition = 0.0;
  double v1_sigma_min = 0.0;
  std::optional<JohnsonResult> johnson;
  double pi_multiplicativity = 0.0;
  double pi_unital = 0.0;
  double pi_range_residual = 0.0;  // max over N-basis of dist(π(q), M) in HS norm
  int pi_range_rank = 0;
  std::optional<SimilarityResult> similarity;
  double s_minus_i = 0.0;

  double pi_minus_l_cb = 0.0;  // upper
  double l_inv_cb = 0.0;       // upper
  double surjectivity_product = 0.0;
  bool surjective_by_bound = false;
  bool surjective_by_solve = false;

  double conjugation_forward = 0.0;   // S·M·S⁻¹ against N
  double conjugation_backward = 0.0;  // S⁻¹·N·S against M
  double conjugation_residual = 0.0;
  double bound_656 = kInf;
  bool bound_656_ok = true;

  Verdict verdict = Verdict::Success;
  std::string verdict_message;
  std::vector<std::pair<std::string, double>> timings;
};

namespace detail {

class StepTimer {
 public:
  explicit StepTimer(std::vector<std::pair<std::string, double>>& out) : out_(out) {}
  void mark(const std::string& step) {
    const auto now = std::chrono::steady_clock::now();
    out_.emplace_back(step, std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }

 private:
  std::vector<std::pair<std::string, double>>& out_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline void add_check(PipelineReport& r, const std::string& name, const NormInterval& m, double bound, double tol) {
  AuditCheck c;
  c.name = name;
  c.measured = m.lower;
  c.measured_upper = m.upper;
  c.bound = bound;
  c.margin = bound - m.lower;
  c.ok = m.lower <= bound + tol;
  r.checks.push_back(std::move(c));
}

}  // namespace detail

/// Runs the chain on algebras M (unital) and N (multi-matrix, *-closed).
///
/// `u_m` and `gamma_hint` (an analytic bound on d(M, N)) enable certified mode; without
/// them, or when 4‖u_M‖γ ≥ 1/164, the run is heuristic.
inline PipelineReport run_pipeline(const AlgebraPtr& m, const AlgebraPtr& n, const TensorElement* u_m,
                                   std::optional<double> gamma_hint, const PipelineOptions& opt = {},
                                   std::optional<DiagonalCertificate> u_m_certificate = std::nullopt) {
  const Tolerances& tol = opt.tol;
  const SearchOptions& so = opt.search;
  PipelineReport r;
  r.seed = so.seed;
  r.mode_requested = opt.mode;
  r.gamma_analytic = gamma_hint;
  detail::StepTimer timer(r.timings);
  if (opt.mode != "certified" && opt.mode != "heuristic")
    throw Error(ErrorKind::ConfigInvalid, "mode must be certified or heuristic");
  if (m->ambient_dim() != n->ambient_dim()) throw Error(ErrorKind::DimensionMismatch, "M and N have different ambients");
  if (!n->selfadjoint || !n->block_structure())
    throw Error(ErrorKind::NotSelfadjoint, "N must be a multi-matrix *-algebra");
  const int k = n->ambient_dim();
  const Matrix id_k = identity(k);
  if (m->space.residual_op(id_k) > tol.mem_tol) throw Error(ErrorKind::NotUnital, "M does not contain the identity");
  if (m->dim() != n->dim())
    r.log.push_back("dim M = " + std::to_string(m->dim()) + " differs from dim N = " + std::to_string(n->dim()));

  // Diagonal of M and the constant γ_cb.
  if (u_m) {
    const DiagonalCertificate cert = u_m_certificate ? *u_m_certificate : check_diagonal(*u_m, *m, tol, so);
    r.u_m_norm = cert.h_norm.upper;
    r.u_m_certified = cert.passed();
  }
  r.mode = "heuristic";
  if (gamma_hint) {
    r.gamma_source = "analytic";
    r.gamma_cb = std::isfinite(r.u_m_norm) ? kCbLiftConstant * r.u_m_norm * *gamma_hint : kInf;
    r.bound_656 = kSimilarityConstant * r.u_m_norm * *gamma_hint;
  }
  if (opt.mode == "certified") {
    if (!gamma_hint) r.mode_reason = "no analytic gamma supplied";
    else if (!u_m) r.mode_reason = "no diagonal for M supplied";
    else if (!r.u_m_certified) r.mode_reason = "diagonal of M failed certification";
    else if (!(r.gamma_cb < kChainGammaLimit)) r.mode_reason = "gamma_analytic >= 1/(656 |u_M|)";
    else r.mode = "certified";
  } else {
    r.mode_reason = "heuristic requested";
  }
  r.log.push_back("N is not checked for the strict near inclusion N in M; it holds automatically for small "
                  "similarity perturbations and is only estimated otherwise");
  timer.mark("setup");

  const auto [u_n, u_n_cert] = canonical_diagonal(n, tol, so);
  r.u_n_norm = u_n_cert.h_norm.upper;
  r.gamma_star = chain_feasibility_threshold(r.u_n_norm);

  // (1) T = E_N restricted to M.
  const LinearOperatorMap e = conditional_expectation(*n);
  const LinearOperatorMap t = restrict_to(e, m->space);
  const NormInterval t_minus_id = op_norm_interval(t - identity_map(m->space), k, so);
  if (!gamma_hint) {
    r.gamma_source = "measured";
    r.gamma_cb = t_minus_id.lower / 2.0;
  }
  if (r.gamma_cb >= 0.0 && r.gamma_cb < 0.125) r.audit = audit_chain(r.gamma_cb, r.u_n_norm);
  const ChainAudit* au = r.audit ? &*r.audit : nullptr;
  if (au) detail::add_check(r, "T_minus_id", t_minus_id, au->bound_T_minus_id, tol.audit_tol);
  timer.mark("projection");

  // (2) T⁻¹: N → M.
  std::optional<LinearOperatorMap> tinv;
  try {
    InverseResult inv = invert_with_condition(t, n->space, tol);
    r.t_condition = inv.condition_number;
    tinv = std::move(inv.map);
  } catch (const Error& err) {
    r.verdict = Verdict::ProjectionNotInvertible;
    r.verdict_message = err.what();
    timer.mark("inverse");
    return r;
  }
  if (au) detail::add_check(r, "Tinv_cb", op_norm_interval(*tinv, k, so), au->bound_Tinv, tol.audit_tol);
  timer.mark("inverse");

  // (3) The normal part of T⁻¹ is T⁻¹ itself in finite dimension.
  const LinearOperatorMap& v = *tinv;
  r.log.push_back("normal part of the inverse: identity operation at finite dimension (V = T^-1)");
  if (au)
    detail::add_check(r, "V_minus_id", op_norm_interval(v - identity_map(n->space), k, so), au->bound_V_minus_id,
                      tol.audit_tol);

  // (4) L = V(1)⁻¹·V.
  const Matrix v1 = v.apply_projected(id_k);
  {
    const RealVector sv = singular_values(v1);
    r.v1_sigma_min = sv(sv.size() - 1);
  }
  if (!(r.v1_sigma_min > tol.inv_tol)) {
    r.verdict = Verdict::UnitNotInvertible;
    r.verdict_message = "smallest singular value of V(1) is " + std::to_string(r.v1_sigma_min);
    timer.mark("unitization");
    return r;
  }
  const Matrix v1_inv = v1.inverse();
  const LinearOperatorMap l = v.left_multiplied(v1_inv);
  const NormInterval l_cb = op_norm_interval(l, k, so);
  const NormInterval l_minus_id = op_norm_interval(l - identity_map(n->space), k, so);
  if (au) {
    NormInterval v1n;
    v1n.lower = v1n.upper = op_norm(v1_inv);
    detail::add_check(r, "V1_inv", v1n, au->bound_V1_inv, tol.audit_tol);
    detail::add_check(r, "L_cb", l_cb, au->bound_L_cb, tol.audit_tol);
    detail::add_check(r, "L_minus_id", l_minus_id, au->bound_L_minus_id, tol.audit_tol);
    detail::add_check(r, "L_defect", defect_hcb_interval(l, k, so), au->bound_L_defect, tol.audit_tol);
  }
  timer.mark("unitization");

  // (5) Johnson iteration with the diagonal of N.
  JohnsonOptions jo;
  jo.max_iter = opt.johnson_max_iter;
  jo.search = so;
  jo.tol = tol;
  jo.u_norm = r.u_n_norm;
  if (r.certified()) {
    jo.eps = std::max(au->eps, 1e-300);
    jo.mu = au->mu;
    jo.defect_upper = au->bound_L_defect;
    jo.allow_heuristic = false;
  } else {
    jo.eps = au && au->eps > 0.0 ? au->eps : 0.1;
    jo.mu = std::max(1.0, l_cb.upper);
    jo.allow_heuristic = true;
  }
  r.johnson = try_homomorphize(l, u_n, jo);
  timer.mark("johnson");
  if (r.johnson->status != JohnsonStatus::Converged) {
    r.verdict = Verdict::JohnsonFailed;
    r.verdict_message = std::string(to_string(r.johnson->status)) + ": " + r.johnson->message;
    return r;
  }
  const LinearOperatorMap& pi_map = r.johnson->pi;
  r.pi_multiplicativity = basis_multiplicativity_residual(pi_map);
  r.pi_unital = op_norm(pi_map.apply_projected(id_k) - id_k);
  {
    std::vector<Matrix> images;
    for (const Matrix& q : n->space.hs_orthonormal_basis()) {
      const Matrix y = pi_map.apply_projected(q);
      r.pi_range_residual = std::max(r.pi_range_residual, m->space.residual(y));
      images.push_back(y);
    }
    Matrix cols(static_cast<Eigen::Index>(k) * k, static_cast<Eigen::Index>(images.size()));
    for (std::size_t i = 0; i < images.size(); ++i) cols.col(static_cast<Eigen::Index>(i)) = vec(images[i]);
    const RealVector sv = singular_values(cols);
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > tol.rank_tol * std::max(1.0, sv(0))) ++r.pi_range_rank;
  }
  if (au) {
    detail::add_check(r, "pi_minus_L", r.johnson->schedule.pi_minus_l, au->eps, tol.audit_tol);
    detail::add_check(r, "pi_minus_id", op_norm_interval(pi_map - identity_map(n->space), k, so), au->final_check_1,
                      tol.audit_tol);
  }

  // (6) Similarity between id_N and π.
  Representation pi1, pi2;
  try {
    pi1 = identity_representation(n);
    Tolerances rt = tol;
    rt.hom_tol = std::max(tol.hom_tol, 10.0 * r.pi_multiplicativity);
    pi2 = make_representation(n, pi_map, rt);
  } catch (const Error& err) {
    r.verdict = Verdict::JohnsonFailed;
    r.verdict_message = std::string("pi is not a representation: ") + err.what();
    return r;
  }
  SimilarityOptions sim_opt;
  sim_opt.u_norm = r.u_n_norm;
  sim_opt.search = so;
  sim_opt.tol = tol;
  r.similarity = build_similarity(pi1, pi2, u_n, sim_opt);
  r.s_minus_i = r.similarity->s_minus_i;
  timer.mark("similarity");
  if (!r.similarity->invertible) {
    r.verdict = Verdict::SimilaritySingular;
    r.verdict_message = "smallest singular value of S is " + std::to_string(r.similarity->sigma_min);
    return r;
  }

  // (7) Surjectivity of π onto M.
  r.pi_minus_l_cb = op_norm_interval(pi_map - l, k, so).upper;
  try {
    const LinearOperatorMap l_inv = invert(l, m->space, tol);
    r.l_inv_cb = op_norm_interval(l_inv, k, so).upper;
  } catch (const Error&) {
    r.l_inv_cb = kInf;
  }
  if (r.certified()) r.l_inv_cb = std::min(r.l_inv_cb, au->bound_L_inv);
  r.surjectivity_product = r.pi_minus_l_cb * r.l_inv_cb;
  r.surjective_by_bound = r.surjectivity_product < 1.0;
  r.surjective_by_solve = r.pi_range_residual <= tol.mem_tol && r.pi_range_rank == m->dim();
  if (au) {
    NormInterval prod;
    prod.lower = prod.upper = r.surjectivity_product;
    detail::add_check(r, "surjectivity_product", prod, au->final_check_2, tol.audit_tol);
  }
  timer.mark("surjectivity");

  // (8) Conjugation residuals in both directions, normalized by the element norm.
  const Matrix& s = r.similarity->s;
  const Matrix& s_inv = r.similarity->s_inv;
  for (const Matrix& b : m->space.hs_orthonormal_basis()) {
    const Matrix y = s * b * s_inv;
    r.conjugation_forward = std::max(r.conjugation_forward, dist_to_subspace(y, n->space, tol).interval.upper / op_norm(y));
  }
  for (const Matrix& b : n->space.hs_orthonormal_basis()) {
    const Matrix y = s_inv * b * s;
    r.conjugation_backward = std::max(r.conjugation_backward, dist_to_subspace(y, m->space, tol).interval.upper / op_norm(y));
  }
  r.conjugation_residual = std::max(r.conjugation_forward, r.conjugation_backward);
  timer.mark("conjugation");

  // (9) Verdict.
  if (gamma_hint) r.bound_656_ok = r.s_minus_i <= r.bound_656 + tol.audit_tol;
  const auto bad = std::find_if(r.checks.begin(), r.checks.end(), [](const AuditCheck& c) { return !c.ok; });
  if (r.conjugation_residual > tol.pipe_tol || m->dim() != n->dim()) {
    r.verdict = Verdict::ConjugationResidualHigh;
    r.verdict_message = "conjugation residual " + std::to_string(r.conjugation_residual);
  } else if (r.certified() && !r.bound_656_ok) {
    r.verdict = Verdict::SimilarityBoundExceeded;
    r.verdict_message = "|S - I| = " + std::to_string(r.s_minus_i) + " > " + std::to_string(r.bound_656);
  } else if (r.certified() && bad != r.checks.end()) {
    r.verdict = Verdict::AuditViolated;
    r.verdict_message = "audit check " + bad->name + " exceeds its bound";
  } else {
    r.verdict = Verdict::Success;
  }
  return r;
}

/// A generated instance through the pipeline.
inline PipelineReport run_pipeline(const PerturbationInstance& inst, const PipelineOptions& opt = {}) {
  PipelineOptions o = opt;
  o.search.seed = inst.seed;
  PipelineReport r = run_pipeline(inst.m, inst.n, &inst.u_m.element, inst.gamma_analytic, o, inst.u_m.certificate);
  r.description = "generated: blocks=";
  for (std::size_t i = 0; i < inst.block_sizes.size(); ++i)
    r.description += (i ? "," : "") + std::to_string(inst.block_sizes[i]);
  r.description += " K=" + std::to_string(inst.n->ambient_dim());
  return r;
}

struct BatchConfig {
  std::vector<int> block_sizes{1, 1};
  int ambient_dim = 2;
  std::vector<double> t_grid;
  std::vector<std::uint64_t> seeds;
  PipelineOptions pipeline{};
  int threads = 1;
};

struct BatchEntry {
  double t = 0.0;
  std::uint64_t seed = 0;
  double gamma_analytic = 0.0;
  double u_norm_ub = 0.0;
  PipelineReport report;
};

struct BatchGroup {
  double t = 0.0;
  int runs = 0;
  int successes = 0;
  int certified_runs = 0;
  int certified_successes = 0;
  double success_rate = 0.0;
  double min_margin_656 = kInf;  // min over runs of bound_656 − ‖S − I‖
  double max_ratio_656 = 0.0;    // max over runs of ‖S − I‖/bound_656
  double max_conjugation_residual = 0.0;
};

struct BatchSummary {
  std::vector<BatchEntry> entries;  // ordered by (t, seed)
  std::vector<BatchGroup> groups;   // ordered by t
  std::optional<double> failure_threshold;  // smallest t with success rate < 1
  std::optional<double> certified_t_max;    // largest t whose runs were all certified
};

inline void validate(const BatchConfig& c) {
  if (c.ambient_dim < 1) throw Error(ErrorKind::ConfigInvalid, "ambient_dim must be positive");
  if (c.threads < 1) throw Error(ErrorKind::ConfigInvalid, "threads must be positive");
  for (double t : c.t_grid)
    if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::ConfigInvalid, "t values must be finite and >= 0");
  if (c.pipeline.mode != "certified" && c.pipeline.mode != "heuristic")
    throw Error(ErrorKind::ConfigInvalid, "mode must be certified or heuristic");
  try {
    block_diagonal_algebra(c.block_sizes, c.ambient_dim);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigInvalid, e.what());
  }
}

/// Every (t, seed) pair is an independent pipeline run; workers share nothing but the
/// output slots, so the summary does not depend on the thread count.
inline BatchSummary run_batch(const BatchConfig& config) {
  validate(config);
  std::vector<double> ts = config.t_grid;
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<std::uint64_t> seeds = config.seeds;
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  BatchSummary out;
  for (double t : ts)
    for (std::uint64_t s : seeds) out.entries.push_back(BatchEntry{t, s, 0.0, 0.0, {}});
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < out.entries.size(); i = next++) {
      BatchEntry& e = out.entries[i];
      const PerturbationInstance inst = generate_instance(config.block_sizes, config.ambient_dim, e.t, e.seed,
                                                          config.pipeline.tol);
      e.gamma_analytic = inst.gamma_analytic;
      e.u_norm_ub = inst.u_m.certificate.h_norm.upper;
      e.report = run_pipeline(inst, config.pipeline);
    }
  };
  const int nthreads = std::min<int>(config.threads, static_cast<int>(std::max<std::size_t>(1, out.entries.size())));
  if (nthreads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  for (double t : ts) {
    BatchGroup g;
    g.t = t;
    bool all_certified = true;
    for (const BatchEntry& e : out.entries) {
      if (e.t != t) continue;
      const PipelineReport& r = e.report;
      const bool ok = r.verdict == Verdict::Success;
      ++g.runs;
      g.successes += ok;
      if (r.certified()) {
        ++g.certified_runs;
        g.certified_successes += ok;
      } else {
        all_certified = false;
      }
      if (std::isfinite(r.bound_656)) {
        g.min_margin_656 = std::min(g.min_margin_656, r.bound_656 - r.s_minus_i);
        if (r.bound_656 > 0.0) g.max_ratio_656 = std::max(g.max_ratio_656, r.s_minus_i / r.bound_656);
      }
      g.max_conjugation_residual = std::max(g.max_conjugation_residual, r.conjugation_residual);
    }
    g.success_rate = g.runs ? static_cast<double>(g.successes) / g.runs : 0.0;
    if (!out.failure_threshold && g.runs && g.successes < g.runs) out.failure_threshold = t;
    if (g.runs && all_certified) out.certified_t_max = t;
    out.groups.push_back(g);
  }
  return out;
}

}  // namespace kkpert
