#pragma once

#include <cstdint>

namespace kkpert {

/// Numerical tolerances; every default can be overridden per call or per problem file.
struct Tolerances {
  double mem_tol = 1e-9;    // membership / closure residuals
  double rank_tol = 1e-10;  // linear independence, singularity
  double dist_tol = 1e-7;   // width of certified distance intervals
  double diag_tol = 1e-8;   // (C1)/(C2) residuals of a virtual diagonal
  double hom_tol = 1e-10;   // multiplicativity of a homomorphism
  double sched_tol = 1e-9;  // slack in the Johnson schedule dominance check
  double sim_tol = 1e-9;    // intertwining residual
  double inv_tol = 1e-8;    // smallest singular value for invertibility of S
  double der_tol = 1e-9;    // derivation reconstruction residual
  double pipe_tol = 1e-8;   // conjugation residual of the pipeline
  double audit_tol = 1e-6;  // measured-vs-analytic slack in chain audits
};

/// Multi-start local ascent settings for norm and near-inclusion searches.
struct SearchOptions {
  int starts = 64;
  int iterations = 500;
  double plateau = 1e-10;
  std::uint64_t seed = 0;
  /// Stop the multi-start as soon as a start reaches this value (e.g. a known upper bound).
  double target = -1.0;
};

/// Cheaper search used for per-step monitoring inside iterations and pipelines.
inline SearchOptions monitor_search(std::uint64_t seed = 0) {
  SearchOptions o;
  o.starts = 6;
  o.iterations = 80;
  o.plateau = 1e-12;
  o.seed = seed;
  return o;
}

}  // namespace kkpert
