#pragma once

// Subspaces of the K×K complex matrices and their matrix levels M_n(E).

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kkpert/error.hpp"
#include "kkpert/linalg.hpp"
#include "kkpert/options.hpp"

namespace kkpert {

/// One summand M_size ⊗ I_multiplicity of a multi-matrix algebra.
struct Block {
  int size = 1;
  int multiplicity = 1;
  int offset = 0;  // first column of this summand in the intertwining unitary
};

/// Unitary U with U* a U = ⊕_i (a_i ⊗ I_{m_i}) for every element a of a *-algebra.
/// Columns of block i are ordered (j, s) ↦ offset_i + j·m_i + s.
struct BlockStructure {
  std::vector<Block> blocks;
  Matrix unitary;

  std::vector<int> sizes() const {
    std::vector<int> out;
    for (const auto& b : blocks) out.push_back(b.size);
    return out;
  }

  int ambient_dim() const { return static_cast<int>(unitary.rows()); }

  /// Matrix unit e^{(i)}_{jk} of summand i, expressed in the ambient space.
  Matrix matrix_unit(int i, int j, int k) const {
    const Block& b = blocks.at(i);
    Matrix e = Matrix::Zero(ambient_dim(), ambient_dim());
    for (int s = 0; s < b.multiplicity; ++s) {
      e += unitary.col(b.offset + j * b.multiplicity + s) *
           unitary.col(b.offset + k * b.multiplicity + s).adjoint();
    }
    return e;
  }

  /// Block components of x ∈ M_n(A): component i is an (n·size_i)-square matrix.
  std::vector<Matrix> components(const Matrix& x, int n) const {
    const int k = ambient_dim();
    std::vector<Matrix> comps;
    for (const auto& b : blocks) comps.emplace_back(Matrix::Zero(n * b.size, n * b.size));
    for (int p = 0; p < n; ++p) {
      for (int q = 0; q < n; ++q) {
        const Matrix y = unitary.adjoint() * block_of(x, k, p, q) * unitary;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
          const Block& b = blocks[i];
          for (int j = 0; j < b.size; ++j)
            for (int l = 0; l < b.size; ++l)
              comps[i](p * b.size + j, q * b.size + l) =
                  y(b.offset + j * b.multiplicity, b.offset + l * b.multiplicity);
        }
      }
    }
    return comps;
  }

  Matrix assemble(const std::vector<Matrix>& comps, int n) const {
    const int k = ambient_dim();
    Matrix x = Matrix::Zero(n * k, n * k);
    for (int p = 0; p < n; ++p) {
      for (int q = 0; q < n; ++q) {
        Matrix y = Matrix::Zero(k, k);
        for (std::size_t i = 0; i < blocks.size(); ++i) {
          const Block& b = blocks[i];
          for (int j = 0; j < b.size; ++j)
            for (int l = 0; l < b.size; ++l)
              for (int s = 0; s < b.multiplicity; ++s)
                y(b.offset + j * b.multiplicity + s, b.offset + l * b.multiplicity + s) =
                    comps[i](p * b.size + j, q * b.size + l);
        }
        block_of(x, k, p, q) = unitary * y * unitary.adjoint();
      }
    }
    return x;
  }

  /// Block structure of M_n(A) ⊂ M_{nK} derived from that of A.
  BlockStructure amplified(int n) const {
    const int k = ambient_dim();
    BlockStructure out;
    out.unitary = Matrix::Zero(n * k, n * k);
    int offset = 0;
    for (const auto& b : blocks) {
      Block nb{n * b.size, b.multiplicity, offset};
      for (int p = 0; p < n; ++p)
        for (int j = 0; j < b.size; ++j)
          for (int s = 0; s < b.multiplicity; ++s) {
            const int dst = offset + (p * b.size + j) * b.multiplicity + s;
            const int src = b.offset + j * b.multiplicity + s;
            out.unitary.block(p * k, dst, k, 1) = unitary.col(src);
          }
      offset += nb.size * nb.multiplicity;
      out.blocks.push_back(nb);
    }
    return out;
  }
};

/// A linear subspace of M_K given by an ordered basis, with a Hilbert–Schmidt orthonormal basis.
class OperatorSpace {
 public:
  OperatorSpace() = default;

  /// Validates the basis and orthonormalizes it (modified Gram–Schmidt, two passes, input order).
  static OperatorSpace build(int ambient_dim, std::vector<Matrix> basis,
                             const Tolerances& tol = {}) {
    if (ambient_dim <= 0) throw Error(ErrorKind::DimensionMismatch, "ambient dimension must be positive");
    if (basis.empty()) throw Error(ErrorKind::DimensionMismatch, "basis must be nonempty");
    for (std::size_t i = 0; i < basis.size(); ++i) {
      if (basis[i].rows() != ambient_dim || basis[i].cols() != ambient_dim)
        throw Error(ErrorKind::DimensionMismatch,
                    "basis element " + std::to_string(i) + " is not " + std::to_string(ambient_dim) +
                        "x" + std::to_string(ambient_dim));
      if (!all_finite(basis[i]))
        throw Error(ErrorKind::DimensionMismatch, "basis element " + std::to_string(i) + " is not finite");
    }
    const int d = static_cast<int>(basis.size());
    const int kk = ambient_dim * ambient_dim;
    Matrix b(kk, d);
    for (int j = 0; j < d; ++j) b.col(j) = vec(basis[j]);
    const Matrix gram = b.adjoint() * b;
    const double smin = smallest_singular_value(gram);
    if (smin <= tol.rank_tol)
      throw Error(ErrorKind::DependentBasis,
                  "smallest singular value of the Gram matrix is " + std::to_string(smin));

    Matrix q = b;
    for (int j = 0; j < d; ++j) {
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      q.col(j) /= q.col(j).norm();
    }
    if ((b - q * (q.adjoint() * b)).norm() > tol.rank_tol * std::max(1.0, b.norm()))
      throw Error(ErrorKind::DependentBasis, "orthonormalized basis does not reproduce the input span");

    OperatorSpace s;
    s.ambient_ = ambient_dim;
    s.basis_ = std::move(basis);
    s.q_ = std::move(q);
    s.fill_onb();
    return s;
  }

  /// Space spanned by HS-orthonormal columns (vectorized), no validation beyond shape.
  static OperatorSpace from_orthonormal_columns(int ambient_dim, Matrix q) {
    OperatorSpace s;
    s.ambient_ = ambient_dim;
    s.q_ = std::move(q);
    s.fill_onb();
    s.basis_ = s.onb_;
    return s;
  }

  /// All of M_K with the matrix-unit basis, tagged as the one-block multi-matrix algebra.
  static OperatorSpace full(int k) {
    Matrix q = Matrix::Identity(k * k, k * k);
    OperatorSpace s = from_orthonormal_columns(k, q);
    BlockStructure bs;
    bs.blocks.push_back({k, 1, 0});
    bs.unitary = identity(k);
    s.blocks_ = bs;
    return s;
  }

  int ambient_dim() const { return ambient_; }
  int dim() const { return static_cast<int>(q_.cols()); }
  const std::vector<Matrix>& basis() const { return basis_; }
  const std::vector<Matrix>& hs_orthonormal_basis() const { return onb_; }
  /// Vectorized orthonormal basis as columns (K² × dim).
  const Matrix& onb_columns() const { return q_; }

  const std::optional<BlockStructure>& block_structure() const { return blocks_; }
  bool is_multi_matrix() const { return blocks_.has_value(); }
  void set_block_structure(BlockStructure bs) { blocks_ = std::move(bs); }

  Vector coords(const Matrix& x) const { return q_.adjoint() * vec(x); }
  Matrix element(const Vector& c) const { return unvec(q_ * c, ambient_); }

  /// HS-orthogonal projection, applied blockwise at matrix level n.
  Matrix project(const Matrix& x, int n = 1) const {
    if (n == 1) return element(coords(x));
    Matrix out(x.rows(), x.cols());
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) block_of(out, ambient_, a, b) = element(coords(block_of(x, ambient_, a, b)));
    return out;
  }

  /// Frobenius norm of the component orthogonal to the space.
  double residual(const Matrix& x) const { return (x - project(x)).norm(); }

  /// Operator norm of x − P(x): an upper bound on the operator-norm distance to the space.
  double residual_op(const Matrix& x, int n = 1) const { return op_norm(x - project(x, n)); }

  bool contains(const Matrix& x, double tol) const {
    return x.rows() == ambient_ && x.cols() == ambient_ && residual_op(x) <= tol;
  }

  /// Orthonormal coordinates of X ∈ M_n(E), blocks in column-major order.
  Vector coords_level(const Matrix& x, int n) const {
    const int d = dim();
    Vector c(n * n * d);
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a) c.segment((a + b * n) * d, d) = coords(block_of(x, ambient_, a, b));
    return c;
  }

  Matrix element_level(const Vector& c, int n) const {
    const int d = dim();
    Matrix x(n * ambient_, n * ambient_);
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a) block_of(x, ambient_, a, b) = element(c.segment((a + b * n) * d, d));
    return x;
  }

  /// M_n(E) as an explicit space with basis e_ab ⊗ q_j, index (a + b·n)·dim + j.
  OperatorSpace amplified(int n) const {
    const int d = dim();
    const int big = n * ambient_;
    Matrix q = Matrix::Zero(big * big, n * n * d);
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a)
        for (int j = 0; j < d; ++j) {
          Matrix x = Matrix::Zero(big, big);
          block_of(x, ambient_, a, b) = onb_[j];
          q.col((a + b * n) * d + j) = vec(x);
        }
    OperatorSpace s = from_orthonormal_columns(big, std::move(q));
    if (blocks_) s.blocks_ = blocks_->amplified(n);
    return s;
  }

 private:
  void fill_onb() {
    onb_.clear();
    for (int j = 0; j < q_.cols(); ++j) onb_.push_back(unvec(q_.col(j), ambient_));
  }

  int ambient_ = 0;
  std::vector<Matrix> basis_;
  std::vector<Matrix> onb_;
  Matrix q_;
  std::optional<BlockStructure> blocks_;
};

inline OperatorSpace build_space(int ambient_dim, std::vector<Matrix> basis, const Tolerances& tol = {}) {
  return OperatorSpace::build(ambient_dim, std::move(basis), tol);
}

}  // namespace kkpert
