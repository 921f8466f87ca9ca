// Random instances and reference computations shared by the test suites.
// The reference routines deliberately avoid the library's own algorithms.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "dhinf/model.h"

namespace dhinf::testing {

using Rng = std::mt19937_64;

inline MatrixXd Gaussian(Rng& rng, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) M(i, j) = g(rng);
  }
  return M;
}

inline MatrixXd Orthogonal(Rng& rng, int n) {
  Eigen::HouseholderQR<MatrixXd> qr(Gaussian(rng, n, n));
  return qr.householderQ();
}

inline int Uniform(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Rank-r E = U diag(s, 0) V^T with singular values in [0.5, 2].
inline MatrixXd RankDeficient(Rng& rng, int n, int r) {
  std::uniform_real_distribution<double> sv(0.5, 2.0);
  VectorXd s = VectorXd::Zero(n);
  for (int i = 0; i < r; ++i) s(i) = sv(rng);
  return Orthogonal(rng, n) * s.asDiagonal() * Orthogonal(rng, n).transpose();
}

/// Coefficients (ascending) of det(zE - A) by interpolation at n + 1 points
/// on a circle; degree trimmed where leading terms vanish.
inline std::vector<std::complex<double>> CharPoly(const MatrixXd& E, const MatrixXd& A) {
  const int n = static_cast<int>(E.rows());
  const int k = n + 1;
  Eigen::MatrixXcd V(k, k);
  Eigen::VectorXcd d(k);
  for (int i = 0; i < k; ++i) {
    const std::complex<double> z = std::polar(1.3, 2.0 * M_PI * i / k + 0.1);
    for (int j = 0; j < k; ++j) V(i, j) = std::pow(z, j);
    d(i) = (z * E.cast<std::complex<double>>() - A.cast<std::complex<double>>()).determinant();
  }
  Eigen::VectorXcd c = V.fullPivLu().solve(d);
  std::vector<std::complex<double>> out(c.data(), c.data() + k);
  const double scale = c.cwiseAbs().maxCoeff();
  while (out.size() > 1 && std::abs(out.back()) < 1e-10 * scale) out.pop_back();
  return out;
}

/// Max modulus over roots of det(zE - A) (companion matrix); 0 if constant.
inline double PolyRootSpectralRadius(const MatrixXd& E, const MatrixXd& A) {
  const auto c = CharPoly(E, A);
  const int deg = static_cast<int>(c.size()) - 1;
  if (deg <= 0) return 0.0;
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) C(i, deg - 1) = -c[i] / c[deg];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline Eigen::MatrixXcd DirectTransfer(const MatrixXd& E, const MatrixXd& A, const MatrixXd& B,
                                       const MatrixXd& C, const MatrixXd& D,
                                       std::complex<double> z) {
  const Eigen::MatrixXcd P = z * E.cast<std::complex<double>>() - A.cast<std::complex<double>>();
  return C.cast<std::complex<double>>() *
             P.fullPivLu().solve(B.cast<std::complex<double>>()) +
         D.cast<std::complex<double>>();
}

/// Plain dense grid maximum of sigma_max on the unit circle.
inline double BruteForceNorm(const MatrixXd& E, const MatrixXd& A, const MatrixXd& B,
                             const MatrixXd& C, const MatrixXd& D, int points = 20000) {
  double best = 0.0;
  for (int k = 0; k < points; ++k) {
    const auto P = DirectTransfer(E, A, B, C, D, std::polar(1.0, 2.0 * M_PI * k / points));
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(P);
    best = std::max(best, svd.singularValues()(0));
  }
  return best;
}

inline double MaxEig(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline MatrixXd RandomSymmetric(Rng& rng, int n, double scale = 1.0) {
  const MatrixXd G = Gaussian(rng, n, n, scale);
  return 0.5 * (G + G.transpose());
}

/// Random unit-spectral-norm s x s matrix.
inline MatrixXd UnitDelta(Rng& rng, int s) {
  const MatrixXd D = Gaussian(rng, s, s);
  Eigen::JacobiSVD<MatrixXd> svd(D);
  return D / svd.singularValues()(0);
}

/// Admissible (E, A) built in equivalent coordinates: slow block with
/// spectral radius below `radius`, invertible algebraic block, A21 = 0.
struct Pencil {
  MatrixXd E, A;
};

inline Pencil AdmissiblePencil(Rng& rng, int n, int r, double radius = 0.8) {
  MatrixXd A1 = Gaussian(rng, r, r);
  if (r > 0) {
    Eigen::EigenSolver<MatrixXd> es(A1);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    if (rho > 0.0) A1 *= radius / rho * std::uniform_real_distribution<double>(0.3, 1.0)(rng);
  }
  MatrixXd Ed = MatrixXd::Zero(n, n), Ad = MatrixXd::Zero(n, n);
  Ed.topLeftCorner(r, r).setIdentity();
  Ad.topLeftCorner(r, r) = A1;
  Ad.bottomRightCorner(n - r, n - r) =
      Orthogonal(rng, n - r) * std::uniform_real_distribution<double>(0.7, 1.5)(rng);
  Ad.topRightCorner(r, n - r) = Gaussian(rng, r, n - r, 0.3);
  const MatrixXd Wi = Orthogonal(rng, n) + 0.3 * Gaussian(rng, n, n, 0.3);
  const MatrixXd Vi = Orthogonal(rng, n) + 0.3 * Gaussian(rng, n, n, 0.3);
  return {Wi * Ed * Vi, Wi * Ad * Vi};
}

}  // namespace dhinf::testing
