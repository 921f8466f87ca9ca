#include "dhinf/model.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace dhinf {
namespace {

void ExpectShape(const MatrixXd& M, Eigen::Index rows, Eigen::Index cols,
                 const char* name) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream msg;
    msg << name << " must be " << rows << "x" << cols << ", got " << M.rows()
        << "x" << M.cols();
    throw DimensionError(msg.str());
  }
}

MatrixXd OrZero(MatrixXd M, Eigen::Index rows, Eigen::Index cols,
                const char* name) {
  if (M.size() == 0) return MatrixXd::Zero(rows, cols);
  ExpectShape(M, rows, cols, name);
  return M;
}

// sigma_min / sigma_max of a complex square matrix; 0 for the zero matrix.
double InverseConditionNumber(const MatrixXcd& M) {
  if (M.size() == 0) return 1.0;
  Eigen::JacobiSVD<MatrixXcd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv(0) == 0.0) return 0.0;
  return sv(sv.size() - 1) / sv(0);
}

}  // namespace

DescriptorPlant DescriptorPlant::Make(MatrixXd E, MatrixXd A, MatrixXd Bw,
                                      MatrixXd Bu, MatrixXd C, MatrixXd Dw,
                                      double rank_tol) {
  const auto n = E.rows();
  if (n == 0) throw DimensionError("E must be nonempty");
  ExpectShape(E, n, n, "E");
  ExpectShape(A, n, n, "A");
  if (Bw.rows() != n) throw DimensionError("Bw must have n rows");
  if (Bu.size() == 0) Bu = MatrixXd::Zero(n, 1);
  if (Bu.rows() != n) throw DimensionError("Bu must have n rows");
  if (C.cols() != n) throw DimensionError("C must have n columns");
  ExpectShape(Dw, C.rows(), Bw.cols(), "Dw");
  if (Bw.cols() == 0 || C.rows() == 0) {
    throw DimensionError("disturbance and output dimensions must be positive");
  }
  DescriptorPlant plant{std::move(E), std::move(A), std::move(Bw),
                        std::move(Bu), std::move(C), std::move(Dw), 0};
  plant.r = NumericalRank(plant.E, rank_tol);
  return plant;
}

UncertainPlant UncertainPlant::Certain(DescriptorPlant plant) {
  const int n = plant.n(), q = plant.q(), p = plant.p();
  UncertainPlant u;
  u.plant = std::move(plant);
  u.s = 0;
  u.MA = MatrixXd::Zero(n, 0);
  u.NA = MatrixXd::Zero(0, n);
  u.MB = MatrixXd::Zero(n, 0);
  u.NB = MatrixXd::Zero(0, q);
  u.MC = MatrixXd::Zero(p, 0);
  u.NC = MatrixXd::Zero(0, n);
  u.MD = MatrixXd::Zero(p, 0);
  u.ND = MatrixXd::Zero(0, q);
  return u;
}

UncertainPlant UncertainPlant::Make(DescriptorPlant plant, int s, MatrixXd MA,
                                    MatrixXd NA, MatrixXd MB, MatrixXd NB,
                                    MatrixXd MC, MatrixXd NC, MatrixXd MD,
                                    MatrixXd ND) {
  if (s < 0) throw DimensionError("uncertainty dimension must be >= 0");
  const int n = plant.n(), q = plant.q(), p = plant.p();
  UncertainPlant u;
  u.s = s;
  u.MA = OrZero(std::move(MA), n, s, "MA");
  u.NA = OrZero(std::move(NA), s, n, "NA");
  u.MB = OrZero(std::move(MB), n, s, "MB");
  u.NB = OrZero(std::move(NB), s, q, "NB");
  u.MC = OrZero(std::move(MC), p, s, "MC");
  u.NC = OrZero(std::move(NC), s, n, "NC");
  u.MD = OrZero(std::move(MD), p, s, "MD");
  u.ND = OrZero(std::move(ND), s, q, "ND");
  u.plant = std::move(plant);
  return u;
}

bool UncertainPlant::HasUncertainty() const {
  if (s == 0) return false;
  for (const MatrixXd* f : {&MA, &NA, &MB, &NB, &MC, &NC, &MD, &ND}) {
    if (!f->isZero(0.0)) return true;
  }
  return false;
}

bool UncertainPlant::UncertaintyOnlyInA() const {
  for (const MatrixXd* f : {&MB, &NB, &MC, &NC, &MD, &ND}) {
    if (!f->isZero(0.0)) return false;
  }
  return true;
}

DescriptorPlant UncertainPlant::Realize(const MatrixXd& delta) const {
  DescriptorPlant out = plant;
  if (s == 0) return out;
  ExpectShape(delta, s, s, "Delta");
  out.A += MA * delta * NA;
  out.Bw += MB * delta * NB;
  out.C += MC * delta * NC;
  out.Dw += MD * delta * ND;
  return out;
}

MatrixXd SvdEquivalentForm::Ed() const {
  MatrixXd Ed = MatrixXd::Zero(n, n);
  Ed.topLeftCorner(r, r).setIdentity();
  return Ed;
}

int NumericalRank(const MatrixXd& M, double tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv(0) == 0.0) return 0;
  return static_cast<int>((sv.array() > tol * sv(0)).count());
}

SvdEquivalentForm EquivalentFormFrom(const UncertainPlant& u,
                                     const MatrixXd& W, const MatrixXd& V,
                                     double rank_tol) {
  const DescriptorPlant& pl = u.plant;
  const int n = pl.n();
  ExpectShape(W, n, n, "W");
  ExpectShape(V, n, n, "V");
  const int r = NumericalRank(pl.E, rank_tol);

  SvdEquivalentForm f;
  f.W = W;
  f.V = V;
  f.n = n;
  f.r = r;
  const MatrixXd residual = W * pl.E * V - f.Ed();
  if (residual.norm() > 1e-10 * (1.0 + pl.E.norm()) * (1.0 + W.norm() * V.norm())) {
    throw DimensionError("W E V is not diag(I_r, 0)");
  }
  if (NumericalRank(W, rank_tol) < n || NumericalRank(V, rank_tol) < n) {
    throw DimensionError("W and V must be nonsingular");
  }
  f.Ad = W * pl.A * V;
  f.Bwd = W * pl.Bw;
  f.Bud = W * pl.Bu;
  f.Cd = pl.C * V;
  f.Dwd = pl.Dw;
  f.s = u.s;
  f.MAd = W * u.MA;
  f.NAd = u.NA * V;
  f.MBd = W * u.MB;
  f.NBd = u.NB;
  f.MCd = u.MC;
  f.NCd = u.NC * V;
  f.MD = u.MD;
  f.ND = u.ND;
  return f;
}

SvdEquivalentForm ComputeSvdEquivalentForm(const UncertainPlant& u,
                                           double rank_tol,
                                           bool require_singular) {
  const MatrixXd& E = u.plant.E;
  const int n = static_cast<int>(E.rows());
  Eigen::JacobiSVD<MatrixXd> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  const int r = NumericalRank(E, rank_tol);
  if (require_singular && r == n) {
    throw DimensionError("E is numerically nonsingular");
  }
  VectorXd scale = VectorXd::Ones(n);
  for (int i = 0; i < r; ++i) scale(i) = 1.0 / sv(i);
  const MatrixXd W = scale.asDiagonal() * svd.matrixU().transpose();
  return EquivalentFormFrom(u, W, svd.matrixV(), rank_tol);
}

SvdEquivalentForm ComputeSvdEquivalentForm(const DescriptorPlant& plant,
                                           double rank_tol,
                                           bool require_singular) {
  return ComputeSvdEquivalentForm(UncertainPlant::Certain(plant), rank_tol,
                                  require_singular);
}

RegularityResult CheckRegularity(const MatrixXd& E, const MatrixXd& A,
                                 int trials, std::uint64_t seed) {
  if (E.rows() != E.cols() || A.rows() != E.rows() || A.cols() != E.cols()) {
    throw DimensionError("E and A must be square and of equal size");
  }
  const int n = static_cast<int>(E.rows());
  if (trials <= 0) trials = n + 2;

  std::vector<Complex> points;
  points.reserve(trials + 1);
  for (int k = 0; k < trials; ++k) {
    points.push_back(std::polar(1.37, 2.0 * std::numbers::pi * k / trials));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> radius(0.5, 2.0);
  const double rad = radius(rng);
  points.push_back(std::polar(rad, angle(rng)));

  for (const Complex& lambda : points) {
    const MatrixXcd P = lambda * E.cast<Complex>() - A.cast<Complex>();
    if (InverseConditionNumber(P) > 1e-12) return {true, lambda};
  }
  return {false, std::nullopt};
}

bool CheckCausality(const SvdEquivalentForm& form, double rank_tol) {
  const int k = form.n - form.r;
  if (k == 0) return true;
  return NumericalRank(form.A22(), rank_tol) == k;
}

namespace {

double QzSpectralRadius(const MatrixXd& E, const MatrixXd& A) {
  if (E.isZero(0.0)) return 0.0;
  Eigen::GeneralizedEigenSolver<MatrixXd> ges(A, E, false);
  if (ges.info() != Eigen::Success) {
    throw NotCausalError("QZ iteration failed");
  }
  const double normA = std::max(A.norm(), 1e-300);
  const double normE = E.norm();
  double rho = 0.0;
  for (Eigen::Index i = 0; i < ges.betas().size(); ++i) {
    const Complex alpha = ges.alphas()(i);
    const double beta = ges.betas()(i);
    const bool beta_zero = std::abs(beta) <= 1e-10 * normE;
    if (beta_zero && std::abs(alpha) <= 1e-10 * normA) {
      throw NotCausalError("pencil is numerically irregular");
    }
    if (beta_zero) continue;
    rho = std::max(rho, std::abs(alpha / beta));
  }
  return rho;
}

}  // namespace

double SpectralRadius(const SvdEquivalentForm& form, double rank_tol) {
  if (form.r == 0) return 0.0;
  if (!CheckCausality(form, rank_tol)) {
    return QzSpectralRadius(form.Ed(), form.Ad);
  }
  MatrixXd slow = form.A11();
  if (form.n > form.r) {
    slow -= form.A12() * form.A22().partialPivLu().solve(MatrixXd(form.A21()));
  }
  Eigen::EigenSolver<MatrixXd> es(slow, false);
  if (es.info() != Eigen::Success) return QzSpectralRadius(form.Ed(), form.Ad);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double SpectralRadius(const MatrixXd& E, const MatrixXd& A, double rank_tol) {
  DescriptorPlant pl;
  pl.E = E;
  pl.A = A;
  pl.Bw = MatrixXd::Zero(E.rows(), 0);
  pl.Bu = MatrixXd::Zero(E.rows(), 0);
  pl.C = MatrixXd::Zero(0, E.rows());
  pl.Dw = MatrixXd::Zero(0, 0);
  return SpectralRadius(
      ComputeSvdEquivalentForm(UncertainPlant::Certain(pl), rank_tol),
      rank_tol);
}

AdmissibilityReport CheckAdmissibility(const MatrixXd& E, const MatrixXd& A,
                                       double rank_tol) {
  AdmissibilityReport rep;
  const RegularityResult reg = CheckRegularity(E, A);
  rep.regular = reg.regular;
  rep.witness = reg.witness;
  if (!reg.regular) return rep;

  DescriptorPlant pl;
  pl.E = E;
  pl.A = A;
  pl.Bw = MatrixXd::Zero(E.rows(), 0);
  pl.Bu = MatrixXd::Zero(E.rows(), 0);
  pl.C = MatrixXd::Zero(0, E.rows());
  pl.Dw = MatrixXd::Zero(0, 0);
  const SvdEquivalentForm form =
      ComputeSvdEquivalentForm(UncertainPlant::Certain(pl), rank_tol);
  rep.causal = CheckCausality(form, rank_tol);
  rep.spectral_radius = SpectralRadius(form, rank_tol);
  rep.stable = *rep.spectral_radius < 1.0;
  rep.admissible = *rep.causal && *rep.stable;
  return rep;
}

bool CheckCausalControllability(const MatrixXd& E, const MatrixXd& A,
                                const MatrixXd& B, double rank_tol) {
  const auto n = E.rows();
  if (A.rows() != n || A.cols() != n || E.cols() != n || B.rows() != n) {
    throw DimensionError("E, A, B shapes are inconsistent");
  }
  const auto m = B.cols();
  MatrixXd stacked = MatrixXd::Zero(2 * n, 2 * n + m);
  stacked.topLeftCorner(n, n) = E;
  stacked.bottomLeftCorner(n, n) = A;
  stacked.block(n, n, n, n) = E;
  stacked.bottomRightCorner(n, m) = B;
  return NumericalRank(stacked, rank_tol) ==
         NumericalRank(E, rank_tol) + static_cast<int>(n);
}

Realization DisturbanceRealization(const DescriptorPlant& plant) {
  return {plant.E, plant.A, plant.Bw, plant.C, plant.Dw};
}

Realization DisturbanceRealization(const SvdEquivalentForm& form) {
  return {form.Ed(), form.Ad, form.Bwd, form.Cd, form.Dwd};
}

MatrixXcd TransferValue(const Realization& sys, Complex z) {
  const MatrixXcd P = z * sys.E.cast<Complex>() - sys.A.cast<Complex>();
  const Eigen::PartialPivLU<MatrixXcd> lu(P);
  // Cheap reciprocal-condition estimate from the LU factors.
  const auto& U = lu.matrixLU();
  double umax = 0.0, umin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    umax = std::max(umax, std::abs(U(i, i)));
    umin = std::min(umin, std::abs(U(i, i)));
  }
  if (U.rows() > 0 && !(umin > 1e-13 * umax)) {
    throw SingularPencilError("zE - A is singular at the requested point");
  }
  return sys.C.cast<Complex>() * lu.solve(sys.B.cast<Complex>()) +
         sys.D.cast<Complex>();
}

}  // namespace dhinf
