#pragma once

// Operator-norm distance from a matrix to a subspace (or to its unit ball),
// bracketed by a primal point of the subspace and a dual trace functional.

#include <algorithm>

#include "kkpert/interval.hpp"
#include "kkpert/space.hpp"

namespace kkpert {

struct DistanceResult {
  NormInterval interval;
  Matrix nearest;      // best y found; ‖x − y‖ = interval.upper
  Matrix certificate;  // dual functional realizing interval.lower
  int iterations = 0;  // Newton steps
};

namespace detail {

inline int level_of(const Matrix& x, const OperatorSpace& f) {
  const int k = f.ambient_dim();
  if (x.rows() != x.cols() || k == 0 || x.rows() % k != 0)
    throw Error(ErrorKind::DimensionMismatch, "matrix size is not a multiple of the ambient dimension");
  return static_cast<int>(x.rows()) / k;
}

/// |⟨W, x⟩| / ‖W‖₁, a lower bound on dist(x, F) whenever W annihilates F.
inline double functional_bound(const Matrix& w, const Matrix& x) {
  const double n1 = nuclear_norm(w);
  return n1 > 0.0 ? std::abs(hs_inner(w, x)) / n1 : 0.0;
}

/// Hermitian dilation [[0, y], [y*, 0]].
inline Matrix dilation(const Matrix& y) {
  const Eigen::Index n = y.rows();
  Matrix d = Matrix::Zero(2 * n, 2 * n);
  d.topRightCorner(n, n) = y;
  d.bottomLeftCorner(n, n) = y.adjoint();
  return d;
}

/// Barrier path-following for
///   minimize s  subject to  ‖x − y(c)‖ ≤ s  [and ‖y(c)‖ ≤ 1 when `ball`],
/// with y(c) = Σ c_i Q_i over the level-n orthonormal basis of F and real parameters
/// (Re c, Im c). Both norm constraints are written as dilation LMIs.
class DistanceSdp {
 public:
  DistanceSdp(const Matrix& x, const OperatorSpace& f, int n, bool ball) : x_(x), f_(f), n_(n), ball_(ball) {
    const int big = static_cast<int>(x.rows());
    const int d = f.dim();
    for (int b = 0; b < n; ++b)
      for (int a = 0; a < n; ++a)
        for (int j = 0; j < d; ++j) {
          Matrix q = Matrix::Zero(big, big);
          block_of(q, f.ambient_dim(), a, b) = f.hs_orthonormal_basis()[j];
          basis_.push_back(q);
        }
    const std::size_t m = basis_.size();
    for (std::size_t j = 0; j < m; ++j) basis_.push_back(Complex(0.0, 1.0) * basis_[j]);
    const Eigen::Index two = 2 * x.rows();
    dil_cat_ = Matrix::Zero(two, two * static_cast<Eigen::Index>(basis_.size()));
    for (std::size_t i = 0; i < basis_.size(); ++i)
      dil_cat_.middleCols(static_cast<Eigen::Index>(i) * two, two) = dilation(basis_[i]);
  }

  int params() const { return static_cast<int>(basis_.size()); }

  Matrix y_of(const RealVector& v) const {
    Matrix y = Matrix::Zero(x_.rows(), x_.cols());
    for (int i = 0; i < params(); ++i) y += v(i + 1) * basis_[static_cast<std::size_t>(i)];
    return y;
  }

  RealVector start_from(const Matrix& y0) const {
    RealVector v = RealVector::Zero(params() + 1);
    const Vector c = f_.coords_level(y0, n_);
    const int m = params() / 2;
    for (int i = 0; i < m; ++i) {
      v(i + 1) = c(i).real();
      v(m + i + 1) = c(i).imag();
    }
    return v;
  }

  /// Barrier value t·s − Σ log det M_b, or +inf outside the domain.
  double barrier(const RealVector& v, double t) const {
    double val = t * v(0);
    for (const Matrix& m : lmis(v)) {
      Eigen::LLT<Matrix> llt(m);
      if (llt.info() != Eigen::Success) return kInf;
      const auto& l = llt.matrixLLT();
      for (Eigen::Index i = 0; i < l.rows(); ++i) {
        const double di = l(i, i).real();
        if (!(di > 0.0)) return kInf;
        val -= 2.0 * std::log(di);
      }
    }
    return val;
  }

  /// Gradient and Hessian of the barrier; also returns the scaled inverses M_b⁻¹/t.
  void derivatives(const RealVector& v, double t, RealVector& g, Eigen::MatrixXd& h,
                   std::vector<Matrix>& duals) const {
    const int p = params() + 1;
    g = RealVector::Zero(p);
    h = Eigen::MatrixXd::Zero(p, p);
    g(0) = t;
    duals.clear();
    const auto ms = lmis(v);
    const int m = params();
    for (std::size_t b = 0; b < ms.size(); ++b) {
      const Eigen::Index big = ms[b].rows();
      const Matrix inv = ms[b].ldlt().solve(Matrix::Identity(big, big));
      duals.push_back(inv / t);
      // ∂M/∂v_i: block 0 has +I for s and +D(Q_i); block 1 has −D(Q_i).
      const double sign = b == 0 ? 1.0 : -1.0;
      const Matrix xs = sign * (inv * dil_cat_);  // [X_1 … X_m], X_i = ±M⁻¹D(Q_i)
      Matrix vx(big * big, m), vt(big * big, m);
      for (int i = 0; i < m; ++i) {
        const auto xi = xs.middleCols(static_cast<Eigen::Index>(i) * big, big);
        vx.col(i) = xi.reshaped();
        vt.col(i) = xi.transpose().reshaped();
        g(i + 1) -= xi.trace().real();
      }
      // tr(X_i X_j) = vec(X_i)ᵀ vec(X_jᵀ).
      h.bottomRightCorner(m, m) += (vx.transpose() * vt).real();
      if (b == 0) {
        g(0) -= inv.trace().real();
        const Matrix inv2 = inv * inv;
        h(0, 0) += inv2.trace().real();
        for (int i = 0; i < m; ++i) {
          const double hi = (inv.cwiseProduct(xs.middleCols(static_cast<Eigen::Index>(i) * big, big).transpose()))
                                .sum()
                                .real();
          h(0, i + 1) += hi;
          h(i + 1, 0) += hi;
        }
      }
    }
  }

 private:
  std::vector<Matrix> lmis(const RealVector& v) const {
    const Matrix y = y_of(v);
    const Eigen::Index two = 2 * x_.rows();
    std::vector<Matrix> out;
    out.push_back(v(0) * Matrix::Identity(two, two) - dilation(x_ - y));
    if (ball_) out.push_back(Matrix::Identity(two, two) - dilation(y));
    return out;
  }

  const Matrix& x_;
  const OperatorSpace& f_;
  int n_;
  bool ball_;
  std::vector<Matrix> basis_;
  Matrix dil_cat_;  // dilations of the basis, side by side
};

struct SdpBounds {
  double lo = 0.0;
  double hi = kInf;
  Matrix nearest;
  Matrix certificate;
  int iterations = 0;
};

/// Follows the central path; after each centering the primal iterate gives an upper
/// bound and the dual blocks M⁻¹/t give a certificate.
template <class Certify>
void follow_path(const DistanceSdp& sdp, RealVector v, double lo_scale, SdpBounds& out, const Tolerances& tol,
                 Certify&& certify, int max_newton) {
  double t = 1.0 / std::max(lo_scale, 1e-12);
  RealVector g;
  Eigen::MatrixXd h;
  std::vector<Matrix> duals;
  while (out.hi - out.lo > tol.dist_tol && out.iterations < max_newton) {
    for (int it = 0; it < 60 && out.iterations < max_newton; ++it) {
      sdp.derivatives(v, t, g, h, duals);
      h.diagonal().array() += 1e-14 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
      const RealVector step = h.ldlt().solve(-g);
      const double decrement = -g.dot(step);
      ++out.iterations;
      if (!step.allFinite()) break;
      if (decrement < 1e-10) break;
      const double f0 = sdp.barrier(v, t);
      double alpha = 1.0;
      RealVector trial = v + alpha * step;
      while (alpha > 1e-12 && sdp.barrier(trial, t) > f0 - 0.25 * alpha * decrement) {
        alpha *= 0.5;
        trial = v + alpha * step;
      }
      if (alpha <= 1e-12) break;
      v = trial;
    }
    sdp.derivatives(v, t, g, h, duals);
    certify(v, duals);
    if (t > 1e16) break;
    t *= 8.0;
  }
}

}  // namespace detail

/// min over y in M_n(F) of ‖x − y‖, where n = x.rows() / K.
///
/// Upper bounds come from points of F, lower bounds from trace functionals W ⊥ F
/// through |⟨W, x⟩| ≤ ‖W‖₁·‖x − y‖.
inline DistanceResult dist_to_subspace(const Matrix& x, const OperatorSpace& f, const Tolerances& tol = {},
                                       int max_newton = 400) {
  const int n = detail::level_of(x, f);
  DistanceResult out;
  out.interval.tag("dual-certificate");
  out.interval.tag("barrier-sdp");
  detail::SdpBounds b;
  b.nearest = f.project(x, n);
  b.certificate = x - b.nearest;
  b.hi = op_norm(b.certificate);
  b.lo = detail::functional_bound(b.certificate, x);

  if (b.hi - b.lo > tol.dist_tol) {
    detail::DistanceSdp sdp(x, f, n, false);
    const Eigen::Index big = x.rows();
    RealVector v = sdp.start_from(b.nearest);
    v(0) = 1.5 * b.hi + 1e-3 * std::max(1.0, x.norm());
    auto certify = [&](const RealVector& vv, const std::vector<Matrix>& duals) {
      const Matrix y = sdp.y_of(vv);
      const double ub = op_norm(x - y);
      if (ub < b.hi) {
        b.hi = ub;
        b.nearest = y;
      }
      Matrix w = duals[0].topRightCorner(big, big);
      w -= f.project(w, n);
      const double lb = detail::functional_bound(w, x);
      if (lb > b.lo) {
        b.lo = std::min(lb, b.hi);
        b.certificate = w;
      }
    };
    detail::follow_path(sdp, v, b.hi, b, tol, certify, max_newton);
  }
  out.nearest = b.nearest;
  out.certificate = b.certificate;
  out.iterations = b.iterations;
  out.interval.lower = b.lo;
  out.interval.upper = b.hi;
  out.interval.converged = b.hi - b.lo <= tol.dist_tol;
  return out;
}

/// min over y in the unit ball of M_n(F) of ‖x − y‖.
///
/// Lower bounds use pairs (W₁, W₂) with ‖W₁‖₁ ≤ 1 and P_F W₁ = P_F W₂:
/// ‖x − y‖ ≥ Re⟨W₁, x⟩ − ‖W₂‖₁ for every y in the unit ball of F.
inline DistanceResult dist_to_unit_ball(const Matrix& x, const OperatorSpace& f, const Tolerances& tol = {},
                                        int max_newton = 400) {
  const int n = detail::level_of(x, f);
  const DistanceResult sub = dist_to_subspace(x, f, tol, max_newton);
  DistanceResult out;
  out.interval.tag("dual-certificate");
  out.interval.tag("barrier-sdp");
  detail::SdpBounds b;
  b.lo = sub.interval.lower;
  b.certificate = sub.certificate;
  const double ny = op_norm(sub.nearest);
  b.nearest = ny > 1.0 ? Matrix(sub.nearest / ny) : sub.nearest;
  b.hi = op_norm(x - b.nearest);

  if (b.hi - b.lo > tol.dist_tol) {
    detail::DistanceSdp sdp(x, f, n, true);
    const Eigen::Index big = x.rows();
    const double scale = std::max(ny, 1.0);
    RealVector v = sdp.start_from(0.5 * sub.nearest / scale);
    v(0) = op_norm(x - 0.5 * sub.nearest / scale) * 1.5 + 1e-3 * std::max(1.0, x.norm());
    auto certify = [&](const RealVector& vv, const std::vector<Matrix>& duals) {
      const Matrix y = sdp.y_of(vv);
      const double ub = op_norm(x - y);
      if (ub < b.hi) {
        b.hi = ub;
        b.nearest = y;
      }
      Matrix w1 = 2.0 * duals[0].topRightCorner(big, big);
      const double n1 = nuclear_norm(w1);
      if (n1 <= 0.0) return;
      w1 /= n1;
      Matrix w2 = 2.0 * duals[1].topRightCorner(big, big) / n1;
      w2 += f.project(w1, n) - f.project(w2, n);
      const double lb = hs_inner(w1, x).real() - nuclear_norm(w2);
      if (lb > b.lo) {
        b.lo = std::min(lb, b.hi);
        b.certificate = w1;
      }
    };
    detail::follow_path(sdp, v, b.hi, b, tol, certify, max_newton);
  }
  out.nearest = b.nearest;
  out.certificate = b.certificate;
  out.iterations = sub.iterations + b.iterations;
  out.interval.lower = b.lo;
  out.interval.upper = b.hi;
  out.interval.converged = b.hi - b.lo <= tol.dist_tol;
  return out;
}

}  // namespace kkpert
