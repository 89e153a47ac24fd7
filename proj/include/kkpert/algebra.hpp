#pragma once

// Unital subalgebras of M_K: structure constants, selfadjointness, block
// diagonalization of *-algebras, commutants and conditional expectations.

#include <algorithm>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "kkpert/linear_map.hpp"

namespace kkpert {

struct OperatorAlgebra {
  OperatorSpace space;  // carries the block structure when the algebra is selfadjoint
  Matrix unit;
  /// c[(i·d + j)·d + m] with q_i q_j = Σ_m c[i,j,m] q_m over the orthonormal basis q.
  std::vector<Complex> structure_constants;
  bool selfadjoint = false;
  double unit_residual = 0.0;
  double closure_residual = 0.0;
  double adjoint_residual = 0.0;

  int dim() const { return space.dim(); }
  int ambient_dim() const { return space.ambient_dim(); }
  Complex c(int i, int j, int m) const {
    return structure_constants[static_cast<std::size_t>((i * dim() + j) * dim() + m)];
  }
  const std::optional<BlockStructure>& block_structure() const { return space.block_structure(); }
};

using AlgebraPtr = std::shared_ptr<const OperatorAlgebra>;

namespace detail {

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

/// Eigen-decomposes a Hermitian matrix and groups eigenvalues closer than rel_gap.
inline std::vector<Matrix> spectral_projections(const Matrix& h, double rel_gap) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const RealVector& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  std::vector<Matrix> groups;
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= ev.size(); ++i) {
    if (i == ev.size() || ev(i) - ev(i - 1) > rel_gap * scale) {
      groups.push_back(es.eigenvectors().middleCols(start, i - start));
      start = i;
    }
  }
  return groups;  // columns: orthonormal basis of each eigenspace
}

inline Matrix random_selfadjoint_in(const std::vector<Matrix>& basis, CounterRng& rng) {
  Matrix h = Matrix::Zero(basis.front().rows(), basis.front().cols());
  for (const auto& b : basis) h += rng.normal() * (b + b.adjoint());
  return 0.5 * (h + h.adjoint());
}

/// Matrix units of a finite-dimensional *-algebra via central and then minimal projections.
inline std::optional<BlockStructure> detect_block_structure(const OperatorSpace& space, double mem_tol) {
  const int k = space.ambient_dim();
  const int d = space.dim();
  const auto& q = space.hs_orthonormal_basis();

  // Center: coordinates c with Σ_j c_j [q_j, q_i] = 0 for all i.
  Matrix constraints(Eigen::Index(d) * k * k, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) constraints.block(Eigen::Index(i) * k * k, j, k * k, 1) = vec(commutator(q[j], q[i]));
  const Matrix center_coords = null_space(constraints, 1e-9);
  std::vector<Matrix> center;
  for (int l = 0; l < center_coords.cols(); ++l) center.push_back(space.element(center_coords.col(l)));
  const int r = static_cast<int>(center.size());
  if (r == 0) return std::nullopt;

  CounterRng rng(0x5EEDB10C, static_cast<std::uint64_t>(k * 1000 + d));
  std::vector<Matrix> central;  // orthonormal columns spanning the range of each central projection
  for (int attempt = 0; attempt < 8 && static_cast<int>(central.size()) != r; ++attempt)
    central = spectral_projections(random_selfadjoint_in(center, rng), 1e-7);
  if (static_cast<int>(central.size()) != r) return std::nullopt;

  BlockStructure bs;
  bs.unitary = Matrix::Zero(k, k);
  int offset = 0;
  for (const Matrix& vcols : central) {
    const Matrix p = vcols * vcols.adjoint();
    const int rank = static_cast<int>(vcols.cols());
    std::vector<Matrix> compressed;  // p·A·p, restricted to range(p)
    Matrix stacked(Eigen::Index(rank) * rank, d);
    for (int j = 0; j < d; ++j) {
      compressed.push_back(vcols.adjoint() * q[j] * vcols);
      stacked.col(j) = vec(compressed.back());
    }
    const int block_dim = d - static_cast<int>(null_space(stacked, 1e-9).cols());
    const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(block_dim))));
    if (n * n != block_dim || rank % n != 0) return std::nullopt;
    const int m = rank / n;

    std::vector<Matrix> minimal;
    for (int attempt = 0; attempt < 8 && static_cast<int>(minimal.size()) != n; ++attempt)
      minimal = spectral_projections(random_selfadjoint_in(compressed, rng), 1e-7);
    if (static_cast<int>(minimal.size()) != n) return std::nullopt;
    for (const auto& f : minimal)
      if (f.cols() != m) return std::nullopt;

    // E_{j1} = f_j a f_1 / ‖f_j a f_1‖ for a random element a, in range(p) coordinates.
    const Matrix f1 = minimal[0] * minimal[0].adjoint();
    std::vector<Matrix> e_j1{f1};
    for (int j = 1; j < n; ++j) {
      const Matrix fj = minimal[j] * minimal[j].adjoint();
      Matrix x;
      double nx = 0.0;
      for (int attempt = 0; attempt < 8 && nx < 1e-4; ++attempt) {
        Matrix a = Matrix::Zero(rank, rank);
        for (const auto& c : compressed) a += rng.complex_normal() * c;
        x = fj * a * f1;
        nx = op_norm(x);
      }
      if (nx < 1e-4) return std::nullopt;
      e_j1.push_back(x / nx);
    }
    for (int j = 0; j < n; ++j)
      for (int s = 0; s < m; ++s)
        bs.unitary.col(offset + j * m + s) = vcols * (e_j1[j] * minimal[0].col(s));
    bs.blocks.push_back({n, m, offset});
    offset += n * m;
  }
  if (offset != k) return std::nullopt;
  if ((bs.unitary.adjoint() * bs.unitary - identity(k)).norm() > 1e-8) return std::nullopt;
  for (const auto& b : q)
    if (op_norm(bs.assemble(bs.components(b, 1), 1) - b) > std::max(mem_tol, 1e-8)) return std::nullopt;
  return bs;
}

}  // namespace detail

/// Validates unit and multiplicative closure, computes structure constants, detects
/// selfadjointness and, for *-algebras, the block structure.
inline AlgebraPtr build_algebra(OperatorSpace space, bool selfadjoint_hint = false, const Tolerances& tol = {}) {
  const int k = space.ambient_dim();
  const int d = space.dim();
  auto alg = std::make_shared<OperatorAlgebra>();
  alg->unit = identity(k);
  alg->unit_residual = space.residual_op(alg->unit);
  if (alg->unit_residual > tol.mem_tol)
    throw Error(ErrorKind::NotUnital, "identity is at distance " + std::to_string(alg->unit_residual) + " from the span");

  const auto& q = space.hs_orthonormal_basis();
  alg->structure_constants.resize(static_cast<std::size_t>(d) * d * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const Matrix prod = q[i] * q[j];
      const Vector c = space.coords(prod);
      const double res = op_norm(prod - space.element(c));
      alg->closure_residual = std::max(alg->closure_residual, res);
      if (res > tol.mem_tol)
        throw Error(ErrorKind::NotClosedUnderMultiplication,
                    "product of orthonormal basis elements (" + std::to_string(i) + "," + std::to_string(j) +
                        ") has residual " + std::to_string(res));
      for (int m = 0; m < d; ++m) alg->structure_constants[static_cast<std::size_t>((i * d + j) * d + m)] = c(m);
    }
  }

  for (const auto& b : q) alg->adjoint_residual = std::max(alg->adjoint_residual, space.residual_op(b.adjoint()));
  alg->selfadjoint = alg->adjoint_residual <= tol.mem_tol;
  if (selfadjoint_hint && !alg->selfadjoint)
    throw Error(ErrorKind::NotSelfadjoint, "adjoint residual " + std::to_string(alg->adjoint_residual));
  if (alg->selfadjoint && !space.is_multi_matrix()) {
    if (auto bs = detail::detect_block_structure(space, tol.mem_tol)) space.set_block_structure(std::move(*bs));
  }
  alg->space = std::move(space);
  return alg;
}

inline AlgebraPtr build_algebra(int ambient_dim, std::vector<Matrix> basis, bool selfadjoint_hint = false,
                                const Tolerances& tol = {}) {
  return build_algebra(build_space(ambient_dim, std::move(basis), tol), selfadjoint_hint, tol);
}

/// All of M_K.
inline AlgebraPtr full_matrix_algebra(int k) { return build_algebra(OperatorSpace::full(k)); }

/// {x ∈ M_K : x b = b x for all b in A}, as the null space of the stacked commutator operator.
inline OperatorSpace commutant(const OperatorSpace& a) {
  const int k = a.ambient_dim();
  const Matrix id = identity(k);
  Matrix stacked(Eigen::Index(a.dim()) * k * k, k * k);
  for (int i = 0; i < a.dim(); ++i) {
    const Matrix& b = a.hs_orthonormal_basis()[i];
    stacked.middleRows(Eigen::Index(i) * k * k, k * k) = kron(b.transpose(), id) - kron(id, b);
  }
  return OperatorSpace::from_orthonormal_columns(k, null_space(stacked, 1e-10));
}

inline OperatorSpace commutant(const OperatorAlgebra& a) { return commutant(a.space); }

/// Hilbert–Schmidt orthogonal projection of M_K onto a unital *-subalgebra N. For such N
/// it is the trace-preserving conditional expectation; non-*-closed N is refused.
inline LinearOperatorMap conditional_expectation(const OperatorAlgebra& n) {
  if (!n.selfadjoint) throw Error(ErrorKind::NotSelfadjoint, "conditional expectation needs a *-subalgebra");
  const int k = n.ambient_dim();
  const Matrix& q = n.space.onb_columns();
  return {OperatorSpace::full(k), k, q * q.adjoint()};
}

/// Block-diagonal ⊕ M_{n_i} in standard position, padded by a scalar block when Σ n_i < K.
inline AlgebraPtr block_diagonal_algebra(const std::vector<int>& block_sizes, int ambient_dim) {
  int total = 0;
  for (int s : block_sizes) {
    if (s <= 0) throw Error(ErrorKind::BadBlockSizes, "block sizes must be positive");
    total += s;
  }
  if (block_sizes.empty() || total > ambient_dim)
    throw Error(ErrorKind::BadBlockSizes, "block sizes must be nonempty and sum to at most the ambient dimension");
  std::vector<Matrix> basis;
  int offset = 0;
  for (int s : block_sizes) {
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) basis.push_back(matrix_unit(ambient_dim, offset + i, offset + j));
    offset += s;
  }
  if (offset < ambient_dim) {
    Matrix pad = Matrix::Zero(ambient_dim, ambient_dim);
    for (int i = offset; i < ambient_dim; ++i) pad(i, i) = 1.0;
    basis.push_back(pad);
  }
  return build_algebra(ambient_dim, std::move(basis), true);
}

}  // namespace kkpert
