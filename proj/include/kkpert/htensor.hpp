#pragma once

// Finite tensors Σ a_k ⊗ b_k over an algebra: bimodule actions, multiplication,
// Haagerup-norm intervals through elementary operators, and virtual diagonals.

#include <utility>
#include <vector>

#include "kkpert/algebra.hpp"
#include "kkpert/norms.hpp"

namespace kkpert {

struct TensorElement {
  AlgebraPtr algebra;
  std::vector<std::pair<Matrix, Matrix>> pairs;

  int ambient_dim() const { return algebra->ambient_dim(); }
  std::size_t length() const { return pairs.size(); }
};

/// Validates that every leg lies in the algebra.
inline TensorElement make_tensor(AlgebraPtr algebra, std::vector<std::pair<Matrix, Matrix>> pairs,
                                 const Tolerances& tol = {}) {
  const int k = algebra->ambient_dim();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (const Matrix* leg : {&pairs[i].first, &pairs[i].second}) {
      if (leg->rows() != k || leg->cols() != k)
        throw Error(ErrorKind::DimensionMismatch, "tensor leg " + std::to_string(i) + " has wrong shape");
      if (algebra->space.residual_op(*leg) > tol.mem_tol * std::max(1.0, op_norm(*leg)))
        throw Error(ErrorKind::NotMember, "tensor leg " + std::to_string(i) + " is not in the algebra");
    }
  }
  return {std::move(algebra), std::move(pairs)};
}

/// a·u·b, with pairs (a a_k, b_k b).
inline TensorElement module_action(const Matrix& a, const TensorElement& u, const Matrix& b,
                                   const Tolerances& tol = {}) {
  for (const Matrix* m : {&a, &b})
    if (!u.algebra->space.contains(*m, tol.mem_tol * std::max(1.0, op_norm(*m))))
      throw Error(ErrorKind::NotMember, "module_action: factor is not in the algebra");
  TensorElement out{u.algebra, {}};
  for (const auto& [x, y] : u.pairs) out.pairs.emplace_back(a * x, y * b);
  return out;
}

inline TensorElement left_action(const Matrix& a, const TensorElement& u, const Tolerances& tol = {}) {
  return module_action(a, u, identity(u.ambient_dim()), tol);
}

inline TensorElement right_action(const TensorElement& u, const Matrix& b, const Tolerances& tol = {}) {
  return module_action(identity(u.ambient_dim()), u, b, tol);
}

inline TensorElement scaled(const TensorElement& u, Complex s) {
  TensorElement out = u;
  for (auto& p : out.pairs) p.first *= s;
  return out;
}

/// u − v as a formal sum.
inline TensorElement difference(const TensorElement& u, const TensorElement& v) {
  TensorElement out = u;
  for (const auto& [x, y] : v.pairs) out.pairs.emplace_back(-x, y);
  return out;
}

/// Σ a_k b_k.
inline Matrix multiply(const TensorElement& u) {
  Matrix s = Matrix::Zero(u.ambient_dim(), u.ambient_dim());
  for (const auto& [x, y] : u.pairs) s += x * y;
  return s;
}

/// K²×K² matrix of x ↦ Σ a_k x b_k in column-major vectorization: Σ b_kᵀ ⊗ a_k.
inline Matrix elementary_matrix(const TensorElement& u) {
  const int k = u.ambient_dim();
  Matrix c = Matrix::Zero(k * k, k * k);
  for (const auto& [x, y] : u.pairs) c += kron(y.transpose(), x);
  return c;
}

/// x ↦ Σ a_k x b_k on the full matrix algebra M_K.
inline LinearOperatorMap elementary_operator(const TensorElement& u) {
  const int k = u.ambient_dim();
  return {OperatorSpace::full(k), k, elementary_matrix(u)};
}

/// Tensors are compared through their elementary operators.
inline double tensor_distance(const TensorElement& u, const TensorElement& v) {
  return (elementary_matrix(u) - elementary_matrix(v)).norm();
}

inline bool tensor_equal(const TensorElement& u, const TensorElement& v, double tol = 1e-12) {
  return tensor_distance(u, v) <= tol;
}

namespace detail {

/// ‖Σ a_k a_k*‖^{1/2} · ‖Σ b_k* b_k‖^{1/2}.
inline double factorization_norm(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  const int k = static_cast<int>(a.front().rows());
  Matrix ra = Matrix::Zero(k, k), cb = Matrix::Zero(k, k);
  for (const auto& x : a) ra += x * x.adjoint();
  for (const auto& y : b) cb += y.adjoint() * y;
  return std::sqrt(op_norm(ra) * op_norm(cb));
}

struct Recombined {
  std::vector<Matrix> a, b;
};

/// a'_k = Σ_l g_kl a_l and b'_k = Σ_l (g⁻¹)_lk b_l, which represent the same tensor.
inline Recombined recombine(const std::vector<Matrix>& a, const std::vector<Matrix>& b, const Matrix& g,
                            const Matrix& h) {
  const int len = static_cast<int>(a.size());
  Recombined r;
  for (int kk = 0; kk < len; ++kk) {
    Matrix x = Matrix::Zero(a[0].rows(), a[0].cols()), y = x;
    for (int l = 0; l < len; ++l) {
      x += g(kk, l) * a[static_cast<std::size_t>(l)];
      y += h(l, kk) * b[static_cast<std::size_t>(l)];
    }
    r.a.push_back(std::move(x));
    r.b.push_back(std::move(y));
  }
  return r;
}

/// Local descent of log‖Σ a'a'*‖ + log‖Σ b'*b'‖ over invertible recombinations g,
/// started at g = I. Gradients (w.r.t. ḡ, doubled) at top eigenvectors ξ, ζ:
///   ∇₁ = 2 [ξ* a'_k a_l* ξ]_kl / F₁,   ∇₂ = −2 h* [ζ* b_l* b'_k ζ]_lk h* / F₂,   h = g⁻¹.
inline double minimize_factorization(const std::vector<Matrix>& a, const std::vector<Matrix>& b, double floor,
                                     int iterations) {
  const int len = static_cast<int>(a.size());
  double best = factorization_norm(a, b);
  if (len == 0 || best - floor <= 1e-9 * std::max(1.0, floor)) return best;
  Matrix g = Matrix::Identity(len, len), h = g;
  auto objective = [&](const Matrix& gg, const Matrix& hh, Recombined& out) {
    out = recombine(a, b, gg, hh);
    return factorization_norm(out.a, out.b);
  };
  Recombined cur;
  double val = objective(g, h, cur);
  double step = 0.1;
  for (int it = 0; it < iterations; ++it) {
    const int k = static_cast<int>(a[0].rows());
    Matrix ra = Matrix::Zero(k, k), cb = Matrix::Zero(k, k);
    for (const auto& x : cur.a) ra += x * x.adjoint();
    for (const auto& y : cur.b) cb += y.adjoint() * y;
    Eigen::SelfAdjointEigenSolver<Matrix> ea(ra), eb(cb);
    const Vector xi = ea.eigenvectors().col(k - 1);
    const Vector zeta = eb.eigenvectors().col(k - 1);
    const double f1 = ea.eigenvalues()(k - 1), f2 = eb.eigenvalues()(k - 1);
    if (f1 <= 0.0 || f2 <= 0.0) break;
    Matrix c1(len, len), d2(len, len);
    for (int p = 0; p < len; ++p)
      for (int q = 0; q < len; ++q) {
        c1(p, q) = xi.dot(cur.a[static_cast<std::size_t>(p)] * a[static_cast<std::size_t>(q)].adjoint() * xi);
        d2(q, p) = zeta.dot(b[static_cast<std::size_t>(q)].adjoint() * cur.b[static_cast<std::size_t>(p)] * zeta);
      }
    const Matrix grad = 2.0 * c1 / f1 - 2.0 * h.adjoint() * d2 * h.adjoint() / f2;
    const double gn2 = grad.squaredNorm();
    if (gn2 < 1e-24) break;
    const double phi = std::log(f1) + std::log(f2);
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      const Matrix g_new = g - step * grad;
      Eigen::FullPivLU<Matrix> lu(g_new);
      if (!lu.isInvertible()) {
        step *= 0.5;
        continue;
      }
      const Matrix h_new = lu.inverse();
      Recombined trial;
      const double v = objective(g_new, h_new, trial);
      if (2.0 * std::log(v) <= phi - 1e-4 * step * gn2) {
        g = g_new;
        h = h_new;
        cur = std::move(trial);
        val = v;
        accepted = true;
        step *= 2.0;
        break;
      }
      step *= 0.5;
    }
    best = std::min(best, val);
    if (!accepted || best - floor <= 1e-12 * std::max(1.0, floor)) break;
  }
  return best;
}

}  // namespace detail

/// Haagerup-norm interval: lower from the cb norm of the elementary operator, upper from
/// the best row/column factorization found among recombinations of the given pairs.
inline NormInterval h_norm_interval(const TensorElement& u, const SearchOptions& opt = {}) {
  NormInterval out;
  if (u.pairs.empty()) {
    out.lower = out.upper = 0.0;
    return out;
  }
  std::vector<Matrix> a, b;
  for (const auto& [x, y] : u.pairs) {
    a.push_back(x);
    b.push_back(y);
  }
  const double unit_floor = op_norm(multiply(u));  // ‖m(u)‖ ≤ ‖u‖_h
  const double upper = detail::minimize_factorization(a, b, unit_floor, 200);
  SearchOptions o = opt;
  o.target = upper;
  const NormInterval cb = cb_norm_interval(elementary_operator(u), o, u.ambient_dim());
  out.lower = std::min(cb.lower, upper);
  out.upper = upper;
  out.witnesses = cb.witnesses;
  out.level_lower = cb.level_lower;
  out.converged = cb.converged || out.width() <= 1e-9;
  out.tag("elementary-operator-cb");
  out.tag("factorization");
  return out;
}

struct DiagonalCertificate {
  double c1_residual = 0.0;  // max over basis m of an upper bound on ‖m·u − u·m‖_h
  double c1_lower = 0.0;     // the matching lower bound
  double c2_residual = 0.0;  // ‖Σ a_k b_k − I‖
  NormInterval h_norm;
  bool c1_pass = false;
  bool c2_pass = false;
  bool consistent = true;  // false if (C2) holds but the h-norm lower bound is below 1
  double tolerance = 0.0;

  bool passed() const { return c1_pass && c2_pass && consistent; }
};

/// (C1) m·u = u·m on the orthonormal basis and (C2) Σ a_k b_k = I. For v = m·u − u·m with
/// elementary matrix C: ‖C‖₂/√K ≤ ‖Φ_v‖ ≤ ‖v‖_h = ‖Φ_v‖_cb ≤ K·‖C‖₂.
inline DiagonalCertificate check_diagonal(const TensorElement& u, const OperatorAlgebra& algebra,
                                          const Tolerances& tol = {}, const SearchOptions& opt = {}) {
  const int k = algebra.ambient_dim();
  if (u.ambient_dim() != k) throw Error(ErrorKind::DimensionMismatch, "check_diagonal: ambient dimensions differ");
  DiagonalCertificate cert;
  cert.tolerance = tol.diag_tol;
  const Matrix cu = elementary_matrix(u);
  for (const Matrix& m : algebra.space.hs_orthonormal_basis()) {
    // Φ_{m·u − u·m}(x) = m Φ_u(x) − Φ_u(x) m, i.e. (I ⊗ m − mᵀ ⊗ I)·C.
    const Matrix c = (kron(identity(k), m) - kron(m.transpose(), identity(k))) * cu;
    const double s = op_norm(c);
    cert.c1_residual = std::max(cert.c1_residual, k * s);
    cert.c1_lower = std::max(cert.c1_lower, s / std::sqrt(static_cast<double>(k)));
  }
  cert.c2_residual = op_norm(multiply(u) - identity(k));
  cert.c1_pass = cert.c1_residual <= tol.diag_tol;
  cert.c2_pass = cert.c2_residual <= tol.diag_tol;
  cert.h_norm = h_norm_interval(u, opt);
  cert.consistent = !(cert.c2_pass && cert.h_norm.lower < 1.0 - 1e-9);
  return cert;
}

/// u = Σ_i Σ_j e^{(i)}_{j1} ⊗ e^{(i)}_{1j} in the matrix units of the block structure.
inline TensorElement canonical_diagonal_element(const AlgebraPtr& n) {
  const auto& bs = n->block_structure();
  if (!bs) throw Error(ErrorKind::NoBlockStructure, "canonical_diagonal needs a multi-matrix algebra");
  TensorElement u{n, {}};
  for (std::size_t i = 0; i < bs->blocks.size(); ++i)
    for (int j = 0; j < bs->blocks[i].size; ++j)
      u.pairs.emplace_back(bs->matrix_unit(static_cast<int>(i), j, 0), bs->matrix_unit(static_cast<int>(i), 0, j));
  return u;
}

inline std::pair<TensorElement, DiagonalCertificate> canonical_diagonal(const AlgebraPtr& n,
                                                                        const Tolerances& tol = {},
                                                                        const SearchOptions& opt = {}) {
  TensorElement u = canonical_diagonal_element(n);
  DiagonalCertificate cert = check_diagonal(u, *n, tol, opt);
  return {std::move(u), std::move(cert)};
}

/// S·A·S⁻¹ as an algebra, with basis the conjugated basis of A.
inline AlgebraPtr conjugate_algebra(const OperatorAlgebra& a, const Matrix& s, const Matrix& s_inv,
                                    const Tolerances& tol = {}) {
  std::vector<Matrix> basis;
  for (const Matrix& b : a.space.basis()) basis.push_back(s * b * s_inv);
  return build_algebra(a.ambient_dim(), std::move(basis), false, tol);
}

struct TransportResult {
  TensorElement element;
  DiagonalCertificate certificate;
  double condition_number = 0.0;  // ‖S‖·‖S⁻¹‖
};

/// Pairs (S a_k S⁻¹, S b_k S⁻¹), a diagonal for S·N·S⁻¹. `target` may supply that algebra.
inline TransportResult transport_diagonal(const TensorElement& u, const Matrix& s, AlgebraPtr target = nullptr,
                                          const Tolerances& tol = {}, const SearchOptions& opt = {}) {
  const int k = u.ambient_dim();
  if (s.rows() != k || s.cols() != k) throw Error(ErrorKind::DimensionMismatch, "transport: S has wrong shape");
  const RealVector sv = singular_values(s);
  if (sv(sv.size() - 1) <= tol.rank_tol) throw Error(ErrorKind::Singular, "transport: S is not invertible");
  const Matrix s_inv = s.inverse();
  if (!target) target = conjugate_algebra(*u.algebra, s, s_inv, tol);
  TransportResult out;
  out.condition_number = sv(0) / sv(sv.size() - 1);
  out.element.algebra = target;
  for (const auto& [x, y] : u.pairs) out.element.pairs.emplace_back(s * x * s_inv, s * y * s_inv);
  out.certificate = check_diagonal(out.element, *target, tol, opt);
  return out;
}

}  // namespace kkpert
