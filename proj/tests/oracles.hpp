#pragma once

// Reference computations used by the tests. They share nothing with the library beyond
// the Matrix typedef, so agreement is a real cross-check.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline double opnorm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

inline Mat unit(int k, int i, int j) {
  Mat m = Mat::Zero(k, k);
  m(i, j) = 1.0;
  return m;
}

inline Mat random_gaussian(int k, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Mat m(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = Complex(nd(gen), nd(gen));
  return m;
}

inline Mat random_unitary(int k, std::mt19937_64& gen) {
  Eigen::HouseholderQR<Mat> qr(random_gaussian(k, gen));
  return qr.householderQ() * Mat::Identity(k, k);
}

/// Applies f to each k×k block of an nk×nk matrix.
inline Mat blockwise(const Mat& x, int k, const std::function<Mat(const Mat&)>& f) {
  const int n = static_cast<int>(x.rows()) / k;
  const int kout = static_cast<int>(f(Mat::Zero(k, k)).rows());
  Mat y(n * kout, n * kout);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) y.block(a * kout, b * kout, kout, kout) = f(x.block(a * k, b * k, k, k));
  return y;
}

/// max over unitaries U of ‖(id_n ⊗ T)(U)‖ for a map on all of M_k, by projected ascent
/// from random unitary starts. Since the ball of M_nk is the hull of the unitaries, this
/// is the norm of the ampliation.
inline double ampliation_norm_over_unitaries(const std::function<Mat(const Mat&)>& t,
                                             const std::function<Mat(const Mat&)>& t_adjoint, int k, int n,
                                             int starts, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  double best = 0.0;
  for (int s = 0; s < starts; ++s) {
    Mat u = random_unitary(n * k, gen);
    double val = 0.0;
    for (int it = 0; it < 200; ++it) {
      const Mat y = blockwise(u, k, t);
      Eigen::JacobiSVD<Mat> svd(y, Eigen::ComputeFullU | Eigen::ComputeFullV);
      val = svd.singularValues()(0);
      const Mat g = blockwise(svd.matrixU().col(0) * svd.matrixV().col(0).adjoint(), static_cast<int>(y.rows()) / n,
                              t_adjoint);
      Eigen::JacobiSVD<Mat> pg(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Mat next = pg.matrixU() * pg.matrixV().adjoint();
      if ((next - u).norm() < 1e-13) break;
      u = next;
    }
    best = std::max(best, val);
  }
  return best;
}

/// min over a square grid of complex parameters c of f(c).
inline double complex_grid_min(const std::function<double(Complex)>& f, double radius, int steps) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= steps; ++j) {
      const Complex c(-radius + 2.0 * radius * i / steps, -radius + 2.0 * radius * j / steps);
      best = std::min(best, f(c));
    }
  return best;
}

/// Null space dimension of the linear system X ↦ [A_i, X] = 0 for all i, by SVD.
inline int commutant_dimension(const std::vector<Mat>& gens, int k) {
  Mat sys(static_cast<Eigen::Index>(gens.size()) * k * k, k * k);
  for (std::size_t g = 0; g < gens.size(); ++g)
    for (int c = 0; c < k * k; ++c) {
      Mat e = Mat::Zero(k, k);
      e(c % k, c / k) = 1.0;
      const Mat comm = gens[g] * e - e * gens[g];
      sys.block(static_cast<Eigen::Index>(g) * k * k, c, k * k, 1) = comm.reshaped();
    }
  Eigen::JacobiSVD<Mat> svd(sys);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-10;
  return k * k - rank;
}

/// The chain constants written out term by term.
struct Chain {
  double t_minus_id, t_inv, v_minus_id, v1_inv, l_cb, l_minus_id, l_defect, l_inv, eps, check1, check2;
};

inline Chain chain(double g, double u) {
  Chain c{};
  c.t_minus_id = 2 * g;
  c.t_inv = 1 / (1 - 2 * g);
  c.v_minus_id = 2 * g / (1 - 2 * g);
  c.v1_inv = (1 - 2 * g) / (1 - 4 * g);
  c.l_cb = 1 / (1 - 4 * g);
  c.l_minus_id = 4 * g / (1 - 4 * g);
  c.l_defect = 12 * g / ((1 - 4 * g) * (1 - 4 * g));
  c.l_inv = (1 - 4 * g) / (1 - 8 * g);
  c.eps = c.l_defect * (4 * u + 8 * c.l_cb * c.l_cb * u * u);
  c.check1 = c.eps + c.l_minus_id;
  c.check2 = c.eps * c.l_inv;
  return c;
}

}  // namespace oracle
