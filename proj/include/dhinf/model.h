#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dhinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using MatrixXcd = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Relative singular-value threshold used for every rank decision.
inline constexpr double kDefaultRankTol = 1e-10;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when zE - A is numerically singular at the requested point.
class SingularPencilError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotCausalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// E x(k+1) = A x(k) + Bw w(k) + Bu u(k),  y(k) = C x(k) + Dw w(k).
///
/// E may be singular; r caches its numerical rank. Bu may be all zero when the
/// plant is only analyzed.
struct DescriptorPlant {
  MatrixXd E, A, Bw, Bu, C, Dw;
  int r = 0;

  int n() const { return static_cast<int>(E.rows()); }
  int q() const { return static_cast<int>(Bw.cols()); }
  int m() const { return static_cast<int>(Bu.cols()); }
  int p() const { return static_cast<int>(C.rows()); }

  /// Validates shapes and fills in r. Throws DimensionError.
  static DescriptorPlant Make(MatrixXd E, MatrixXd A, MatrixXd Bw, MatrixXd Bu,
                              MatrixXd C, MatrixXd Dw,
                              double rank_tol = kDefaultRankTol);
};

/// Norm-bounded uncertainty: A + MA D NA, Bw + MB D NB, C + MC D NC,
/// Dw + MD D ND with a shared s x s block D, ||D||_2 <= 1.
struct UncertainPlant {
  DescriptorPlant plant;
  MatrixXd MA, NA, MB, NB, MC, NC, MD, ND;
  int s = 0;

  /// Plant without uncertainty (s = 0, every factor empty).
  static UncertainPlant Certain(DescriptorPlant plant);

  /// Missing factors (size 0) are replaced by zero blocks of the right shape.
  static UncertainPlant Make(DescriptorPlant plant, int s, MatrixXd MA,
                             MatrixXd NA, MatrixXd MB = {}, MatrixXd NB = {},
                             MatrixXd MC = {}, MatrixXd NC = {},
                             MatrixXd MD = {}, MatrixXd ND = {});

  bool HasUncertainty() const;
  /// True when every factor except MA and NA is zero.
  bool UncertaintyOnlyInA() const;

  /// The certain plant obtained for one admissible value of D (s x s).
  DescriptorPlant Realize(const MatrixXd& delta) const;
};

/// Coordinates in which W E V = diag(I_r, 0). Blocks of A_d, B_wd and C_d are
/// exposed through the accessors below; every (n - r)-sized block is empty
/// when E is nonsingular.
struct SvdEquivalentForm {
  MatrixXd W, V;
  int n = 0;
  int r = 0;

  MatrixXd Ad, Bwd, Bud, Cd, Dwd;
  // Transformed uncertainty factors (MD, ND pass through unchanged).
  MatrixXd MAd, NAd, MBd, NBd, MCd, NCd, MD, ND;
  int s = 0;

  int q() const { return static_cast<int>(Bwd.cols()); }
  int m() const { return static_cast<int>(Bud.cols()); }
  int p() const { return static_cast<int>(Cd.rows()); }

  auto A11() const { return Ad.topLeftCorner(r, r); }
  auto A12() const { return Ad.topRightCorner(r, n - r); }
  auto A21() const { return Ad.bottomLeftCorner(n - r, r); }
  auto A22() const { return Ad.bottomRightCorner(n - r, n - r); }
  auto B1() const { return Bwd.topRows(r); }
  auto B2() const { return Bwd.bottomRows(n - r); }
  auto C1() const { return Cd.leftCols(r); }
  auto C2() const { return Cd.rightCols(n - r); }

  /// diag(I_r, 0) of size n.
  MatrixXd Ed() const;
};

/// Computes W = diag(S^-1, I) U^T, V = H from E = U diag(S, 0) H^T.
/// Throws DimensionError if require_singular is set and E has full rank.
SvdEquivalentForm ComputeSvdEquivalentForm(const UncertainPlant& plant,
                                           double rank_tol = kDefaultRankTol,
                                           bool require_singular = false);
SvdEquivalentForm ComputeSvdEquivalentForm(const DescriptorPlant& plant,
                                           double rank_tol = kDefaultRankTol,
                                           bool require_singular = false);

/// Builds the equivalent form for caller-supplied nonsingular W, V. Throws
/// DimensionError unless W E V = diag(I_r, 0) to 1e-10 relative.
SvdEquivalentForm EquivalentFormFrom(const UncertainPlant& plant,
                                     const MatrixXd& W, const MatrixXd& V,
                                     double rank_tol = kDefaultRankTol);

/// Count of singular values above tol * sigma_max.
int NumericalRank(const MatrixXd& M, double tol = kDefaultRankTol);

struct RegularityResult {
  bool regular = false;
  std::optional<Complex> witness;
};

/// Samples det(lambda E - A) on a circle of radius 1.37 plus one seeded point.
/// A single well-conditioned sample proves regularity.
RegularityResult CheckRegularity(const MatrixXd& E, const MatrixXd& A,
                                 int trials = -1, std::uint64_t seed = 0);

bool CheckCausality(const SvdEquivalentForm& form,
                    double rank_tol = kDefaultRankTol);

/// Largest modulus over finite generalized eigenvalues of (E, A). Uses the
/// slow-subsystem matrix A11 - A12 A22^-1 A21 when A22 is invertible and
/// falls back to the QZ algorithm otherwise.
double SpectralRadius(const SvdEquivalentForm& form,
                      double rank_tol = kDefaultRankTol);
double SpectralRadius(const MatrixXd& E, const MatrixXd& A,
                      double rank_tol = kDefaultRankTol);

struct AdmissibilityReport {
  bool regular = false;
  std::optional<Complex> witness;
  // Unset when the pencil is irregular.
  std::optional<bool> causal;
  std::optional<bool> stable;
  std::optional<double> spectral_radius;
  bool admissible = false;
};

AdmissibilityReport CheckAdmissibility(const MatrixXd& E, const MatrixXd& A,
                                       double rank_tol = kDefaultRankTol);

/// rank [E 0 0; A E B] == rank E + n.
bool CheckCausalControllability(const MatrixXd& E, const MatrixXd& A,
                                const MatrixXd& B,
                                double rank_tol = kDefaultRankTol);

struct Realization {
  MatrixXd E, A, B, C, D;
};

Realization DisturbanceRealization(const DescriptorPlant& plant);
Realization DisturbanceRealization(const SvdEquivalentForm& form);

/// C (zE - A)^-1 B + D. Throws SingularPencilError near a pencil eigenvalue.
MatrixXcd TransferValue(const Realization& sys, Complex z);

}  // namespace dhinf
