#pragma once

// Linear maps between operator spaces, stored on the domain's orthonormal basis.

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "kkpert/space.hpp"

namespace kkpert {

class LinearOperatorMap {
 public:
  LinearOperatorMap() = default;

  /// coefficients: column j is vec(T(q_j)) for the domain's orthonormal basis q_j.
  LinearOperatorMap(OperatorSpace domain, int codomain_dim, Matrix coefficients)
      : domain_(std::move(domain)), codomain_(codomain_dim), coeff_(std::move(coefficients)) {
    if (coeff_.rows() != Eigen::Index(codomain_) * codomain_ || coeff_.cols() != domain_.dim())
      throw Error(ErrorKind::DimensionMismatch, "coefficient matrix shape does not match domain/codomain");
  }

  /// Tabulates f on the orthonormal basis of the domain.
  static LinearOperatorMap from_function(OperatorSpace domain, int codomain_dim,
                                         const std::function<Matrix(const Matrix&)>& f) {
    Matrix c(Eigen::Index(codomain_dim) * codomain_dim, domain.dim());
    for (int j = 0; j < domain.dim(); ++j) {
      const Matrix y = f(domain.hs_orthonormal_basis()[j]);
      if (y.rows() != codomain_dim || y.cols() != codomain_dim)
        throw Error(ErrorKind::DimensionMismatch, "map output has wrong shape");
      c.col(j) = vec(y);
    }
    return {std::move(domain), codomain_dim, std::move(c)};
  }

  /// Map determined by the images of the domain's input basis (not the orthonormal one).
  static LinearOperatorMap from_basis_images(OperatorSpace domain, int codomain_dim,
                                             const std::vector<Matrix>& images) {
    const auto& basis = domain.basis();
    if (images.size() != basis.size())
      throw Error(ErrorKind::DimensionMismatch, "need one image per basis element");
    const int d = domain.dim();
    const int kk = domain.ambient_dim() * domain.ambient_dim();
    Matrix b(kk, d), img(Eigen::Index(codomain_dim) * codomain_dim, d);
    for (int j = 0; j < d; ++j) {
      b.col(j) = vec(basis[j]);
      if (images[j].rows() != codomain_dim || images[j].cols() != codomain_dim)
        throw Error(ErrorKind::DimensionMismatch, "image " + std::to_string(j) + " has wrong shape");
      img.col(j) = vec(images[j]);
    }
    // q_j = Σ_i r_ij b_i with r = B⁺ Q.
    const Matrix r = b.completeOrthogonalDecomposition().solve(domain.onb_columns());
    return {std::move(domain), codomain_dim, img * r};
  }

  const OperatorSpace& domain() const { return domain_; }
  int codomain_dim() const { return codomain_; }
  const Matrix& coefficients() const { return coeff_; }

  /// Applies T to an element of the domain; rejects inputs off the domain.
  Matrix apply(const Matrix& x, double mem_tol = 1e-9) const {
    if (x.rows() != domain_.ambient_dim() || x.cols() != domain_.ambient_dim())
      throw Error(ErrorKind::DimensionMismatch, "input has wrong shape");
    if (domain_.residual(x) > mem_tol * std::max(1.0, x.norm()))
      throw Error(ErrorKind::NotMember, "input is not in the domain of the map");
    return apply_projected(x);
  }

  /// T ∘ P_domain: no membership check.
  Matrix apply_projected(const Matrix& x) const { return unvec(coeff_ * domain_.coords(x), codomain_); }

  /// n-th ampliation applied blockwise to X ∈ M_n(domain).
  Matrix apply_level(const Matrix& x, int n) const {
    if (n == 1) return apply_projected(x);
    const int k = domain_.ambient_dim();
    Matrix y(n * codomain_, n * codomain_);
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a) block_of(y, codomain_, a, b) = apply_projected(block_of(x, k, a, b));
    return y;
  }

  /// Hilbert–Schmidt adjoint of the n-th ampliation, landing in M_n(domain).
  Matrix adjoint_level(const Matrix& z, int n) const {
    const int k = domain_.ambient_dim();
    Matrix x(n * k, n * k);
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a)
        block_of(x, k, a, b) = domain_.element(coeff_.adjoint() * vec(block_of(z, codomain_, a, b)));
    return x;
  }

  LinearOperatorMap operator+(const LinearOperatorMap& o) const {
    check_same_shape(o);
    return {domain_, codomain_, coeff_ + o.coeff_};
  }
  LinearOperatorMap operator-(const LinearOperatorMap& o) const {
    check_same_shape(o);
    return {domain_, codomain_, coeff_ - o.coeff_};
  }
  LinearOperatorMap scaled(Complex s) const { return {domain_, codomain_, s * coeff_}; }

  /// Left multiplication x ↦ a·T(x).
  LinearOperatorMap left_multiplied(const Matrix& a) const {
    Matrix c(coeff_.rows(), coeff_.cols());
    for (int j = 0; j < coeff_.cols(); ++j) c.col(j) = vec(a * unvec(coeff_.col(j), codomain_));
    return {domain_, codomain_, std::move(c)};
  }

 private:
  void check_same_shape(const LinearOperatorMap& o) const {
    if (o.codomain_ != codomain_ || o.domain_.dim() != domain_.dim() ||
        o.domain_.ambient_dim() != domain_.ambient_dim() ||
        (o.domain_.onb_columns() - domain_.onb_columns()).norm() > 1e-12)
      throw Error(ErrorKind::DimensionMismatch, "maps have different domains or codomains");
  }

  OperatorSpace domain_;
  int codomain_ = 0;
  Matrix coeff_;
};

inline Matrix apply(const LinearOperatorMap& t, const Matrix& x) { return t.apply(x); }

inline LinearOperatorMap identity_map(const OperatorSpace& space) {
  return {space, space.ambient_dim(), space.onb_columns()};
}

/// s ∘ t; the range of t must lie in the domain of s.
inline LinearOperatorMap compose(const LinearOperatorMap& s, const LinearOperatorMap& t,
                                 double mem_tol = 1e-9) {
  if (t.codomain_dim() != s.domain().ambient_dim())
    throw Error(ErrorKind::DimensionMismatch, "compose: codomain of the inner map does not match");
  return LinearOperatorMap::from_function(t.domain(), s.codomain_dim(), [&](const Matrix& q) {
    return s.apply(t.apply_projected(q), mem_tol);
  });
}

/// Change of domain to a subspace of the current one (restriction).
inline LinearOperatorMap restrict_to(const LinearOperatorMap& t, const OperatorSpace& sub,
                                     double mem_tol = 1e-9) {
  return LinearOperatorMap::from_function(sub, t.codomain_dim(),
                                          [&](const Matrix& q) { return t.apply(q, mem_tol); });
}

struct InverseResult {
  LinearOperatorMap map;
  double condition_number = 0.0;
};

/// Inverse of an injective map onto `codomain` (dimensions must agree). The inverse
/// is computed by an exact linear solve on orthonormal coordinates.
inline InverseResult invert_with_condition(const LinearOperatorMap& t, const OperatorSpace& codomain,
                                           const Tolerances& tol = {}) {
  if (codomain.ambient_dim() != t.codomain_dim())
    throw Error(ErrorKind::DimensionMismatch, "invert: codomain ambient dimension mismatch");
  if (codomain.dim() != t.domain().dim())
    throw Error(ErrorKind::DimensionMismatch, "invert: domain and codomain dimensions differ (" +
                                                  std::to_string(t.domain().dim()) + " vs " +
                                                  std::to_string(codomain.dim()) + ")");
  const Matrix g = codomain.onb_columns().adjoint() * t.coefficients();
  const double range_residual = (t.coefficients() - codomain.onb_columns() * g).norm();
  if (range_residual > tol.mem_tol * std::max(1.0, t.coefficients().norm()))
    throw Error(ErrorKind::NotMember, "invert: range is not contained in the codomain");
  const RealVector s = singular_values(g);
  if (s(s.size() - 1) <= tol.rank_tol)
    throw Error(ErrorKind::Singular, "invert: smallest singular value " + std::to_string(s(s.size() - 1)));
  const Matrix ginv = g.partialPivLu().inverse();
  return {LinearOperatorMap(codomain, t.domain().ambient_dim(), t.domain().onb_columns() * ginv),
          s(0) / s(s.size() - 1)};
}

inline LinearOperatorMap invert(const LinearOperatorMap& t, const OperatorSpace& codomain,
                                const Tolerances& tol = {}) {
  return invert_with_condition(t, codomain, tol).map;
}

/// Inverse onto the range of t.
inline LinearOperatorMap invert(const LinearOperatorMap& t, const Tolerances& tol = {}) {
  std::vector<Matrix> images;
  for (const auto& q : t.domain().hs_orthonormal_basis()) images.push_back(t.apply_projected(q));
  // A map of a space into itself inverts onto that space, keeping its block structure.
  if (t.codomain_dim() == t.domain().ambient_dim()) {
    bool inside = true;
    for (const auto& y : images) inside = inside && t.domain().residual_op(y) <= tol.mem_tol * std::max(1.0, op_norm(y));
    if (inside) return invert(t, t.domain(), tol);
  }
  OperatorSpace range;
  try {
    range = build_space(t.codomain_dim(), images, tol);
  } catch (const Error& e) {
    throw Error(ErrorKind::Singular, std::string("invert: map is not injective (") + e.what() + ")");
  }
  return invert(t, range, tol);
}

/// id_{M_n} ⊗ T as an explicit map on M_n(domain).
inline LinearOperatorMap ampliation(const LinearOperatorMap& t, int n) {
  if (n < 1) throw Error(ErrorKind::OutOfRange, "ampliation level must be >= 1");
  if (n == 1) return t;
  OperatorSpace big = t.domain().amplified(n);
  return LinearOperatorMap::from_function(std::move(big), n * t.codomain_dim(),
                                          [&](const Matrix& x) { return t.apply_level(x, n); });
}

}  // namespace kkpert
