#pragma once

// Dense complex linear algebra helpers shared by every module.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace kkpert {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline Matrix identity(int k) { return Matrix::Identity(k, k); }

/// Matrix unit e_{ij} (zero-based indices).
inline Matrix matrix_unit(int k, int i, int j) {
  Matrix e = Matrix::Zero(k, k);
  e(i, j) = 1.0;
  return e;
}

/// Column-major vectorization.
inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, int rows) {
  return Eigen::Map<const Matrix>(v.data(), rows, v.size() / rows);
}

/// Hilbert–Schmidt inner product tr(a* b).
inline Complex hs_inner(const Matrix& a, const Matrix& b) {
  return (a.conjugate().cwiseProduct(b)).sum();
}

inline double frobenius_norm(const Matrix& m) { return m.norm(); }

inline RealVector singular_values(const Matrix& m) {
  if (m.size() == 0) return RealVector();
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

inline double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

inline double nuclear_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m).sum();
}

inline double smallest_singular_value(const Matrix& m) {
  const RealVector s = singular_values(m);
  return s.size() == 0 ? 0.0 : s(s.size() - 1);
}

/// ‖a‖·‖a⁻¹‖ in operator norm; +inf for singular input.
inline double condition_number(const Matrix& a) {
  const RealVector s = singular_values(a);
  if (s.size() == 0 || s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

struct SingularPair {
  double value = 0.0;
  Vector left;
  Vector right;
};

inline SingularPair top_singular_pair(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.singularValues()(0), svd.matrixU().col(0), svd.matrixV().col(0)};
}

/// Unitary polar factor U V* of a square matrix (always unitary, also for singular input).
inline Matrix polar_unitary(const Matrix& g) {
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

/// Nearest point (in Frobenius distance) of the operator-norm ball of radius t.
inline Matrix clip_to_ball(const Matrix& z, double radius) {
  Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  RealVector s = svd.singularValues();
  if (s.size() == 0 || s(0) <= radius) return z;
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::min(s(i), radius);
  return svd.matrixU() * s.cast<Complex>().asDiagonal() * svd.matrixV().adjoint();
}

/// Block (a,b) of size k×k in an (n·k)×(n·k) matrix.
inline auto block_of(Matrix& x, int k, int a, int b) { return x.block(a * k, b * k, k, k); }
inline auto block_of(const Matrix& x, int k, int a, int b) { return x.block(a * k, b * k, k, k); }

/// I_n ⊗ a, i.e. the diagonal ampliation of an element.
inline Matrix diag_ampliation(const Matrix& a, int n) {
  const int k = static_cast<int>(a.rows());
  Matrix x = Matrix::Zero(n * k, n * k);
  for (int i = 0; i < n; ++i) block_of(x, k, i, i) = a;
  return x;
}

inline Matrix direct_sum(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Orthonormal basis (columns) of the null space; singular values ≤ rel_tol·max(1, σ_max) count as zero.
inline Matrix null_space(const Matrix& a, double rel_tol = 1e-9) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const RealVector& s = svd.singularValues();
  const double cut = rel_tol * std::max(1.0, s.size() ? s(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cut) ++rank;
  return svd.matrixV().rightCols(a.cols() - rank);
}

// Counter-based random numbers: value i of stream (seed, stream) is
// splitmix64(seed ^ mix(stream) + (i+1)·golden). Normals use our own Box–Muller
// rather than <random> distributions, whose output is library-specific.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(seed ^ mix(stream + 0x632BE59BD9B4E019ULL)) {}

  static constexpr const char* name() { return "splitmix64-counter"; }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal by Box–Muller (no cached second value).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Complex Gaussian with independent N(0,1) real and imaginary parts.
  Complex complex_normal() {
    const double re = normal();
    return {re, normal()};
  }

  Matrix gaussian_matrix(int rows, int cols) {
    Matrix m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = complex_normal();
    return m;
  }

  Vector gaussian_vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = complex_normal();
    return v;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace kkpert
