#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dhinf/affine.h"
#include "dhinf/model.h"
#include "dhinf/sdp.h"

namespace dhinf {

/// The alpha-extended synthesis was requested for a plant with uncertainty
/// outside A (or a negative alpha).
class InvalidAlphaPath : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One named matrix of decision variables inside the flat scalar vector.
struct VariableBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool symmetric = false;
  int offset = 0;
  /// rows*(rows+1)/2 for symmetric blocks (upper triangle only), rows*cols otherwise.
  int count = 0;
};

class VariableLayout {
 public:
  void Add(std::string name, int rows, int cols, bool symmetric = false);

  /// L (sym r x r), Q (r x r), R (r x (n-r)), S ((n-r) x (n-r)), then Z
  /// (n x m) if m > 0, eps if with_eps, t if with_t.
  static VariableLayout Certificate(int r, int n, int m, bool with_eps, bool with_t);

  int size() const { return size_; }
  const std::vector<VariableBlock>& blocks() const { return blocks_; }
  bool Has(const std::string& name) const;
  const VariableBlock& Get(const std::string& name) const;

  /// Flat index of entry (i, j); for symmetric blocks (i, j) and (j, i) share it.
  int Index(const std::string& name, int i, int j) const;

  /// The block as an affine matrix in all scalar variables.
  AffineMatrix Matrix(const std::string& name) const;
  MatrixXd Extract(const std::string& name, const VectorXd& x) const;
  /// Writes `value` into x (upper triangle for symmetric blocks).
  void Assign(const std::string& name, const MatrixXd& value, VectorXd& x) const;

 private:
  std::vector<VariableBlock> blocks_;
  int size_ = 0;
};

/// A diagonal block of the constraint: F0 + sum x_i F_i <= 0.
struct LmiBlock {
  std::string name;
  /// Row sizes of the sub-blocks, e.g. {r, n, q, r, p, 4s}.
  std::vector<int> partition;
  ConstraintBlock data;
};

struct AffineMatrixInequality {
  VariableLayout layout;
  std::vector<LmiBlock> blocks;

  int Dimension() const;
  std::vector<MatrixXd> Evaluate(const VectorXd& x) const;
  const LmiBlock& Block(const std::string& name) const;

  SdpProblem ToSdp(const SolverConfig& config = {}) const;
  /// Objective vector selecting the scalar t (throws if t is not a variable).
  VectorXd GammaSquaredObjective() const;

  /// Debug dump: dimension, layout and dense coefficient matrices.
  nlohmann::json ToJson() const;
};

/// Turns a symmetric affine matrix into a constraint block. Throws
/// DimensionError if the constant or any coefficient is not exactly symmetric.
LmiBlock MakeLmiBlock(std::string name, std::vector<int> partition,
                      const AffineMatrix& F);

/// [G + eps N^T N, M; M^T, -eps I] with eps = variable eps_index. This is the
/// linear form of G + sym(M D N) <= 0 for all ||D||_2 <= 1.
AffineMatrix AbsorbUncertainty(const AffineMatrix& G, const AffineMatrix& M,
                               const MatrixXd& N, int eps_index);

/// Modified bounded real lemma for the certain plant in equivalent form.
/// Block rows (r, n, q, r, p). gamma == nullopt makes t = gamma^2 a variable.
AffineMatrix NominalBrlMatrix(const SvdEquivalentForm& form,
                              const VariableLayout& layout,
                              std::optional<double> gamma, double alpha);

/// Uncertainty factors of the robust bounded real lemma: M1 is affine
/// (N x 4s), N1 is constant (4s x N).
struct RobustFactors {
  AffineMatrix M1;
  MatrixXd N1;
};
RobustFactors RobustBrlFactors(const SvdEquivalentForm& form,
                               const VariableLayout& layout);

AffineMatrixInequality AssembleNominalBrl(const SvdEquivalentForm& form,
                                          std::optional<double> gamma,
                                          double alpha);

/// Robust analysis program (uncertainty in all four matrices, alpha = 0).
/// Bu is ignored.
AffineMatrixInequality AssembleRobustBrl(const SvdEquivalentForm& form,
                                         std::optional<double> gamma);

/// State-feedback synthesis program built on the dual closed loop with the
/// change of variables [Q R; 0 S] F_d^T = Z.
AffineMatrixInequality AssembleSynthesis(const SvdEquivalentForm& form,
                                         std::optional<double> gamma);

/// Synthesis with the alpha-extended blocks; uncertainty must be confined to
/// A (InvalidAlphaPath otherwise). alpha == 0 reproduces AssembleSynthesis.
AffineMatrixInequality AssembleSynthesisAlpha(const SvdEquivalentForm& form,
                                              std::optional<double> gamma,
                                              double alpha);

/// [G + eps N^T N, M; M^T, -eps I] <= 0 as a program in the single scalar eps.
/// Throws DimensionError if M or N is zero.
AffineMatrixInequality PetersenAbsorb(const MatrixXd& G, const MatrixXd& M,
                                      const MatrixXd& N);

/// rank E^T = rank [E^T C^T NC^T] and rank E = rank [E Bw MB].
bool CheckNonconservativeRanks(const UncertainPlant& plant,
                               double rank_tol = kDefaultRankTol);

}  // namespace dhinf
