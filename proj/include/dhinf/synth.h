#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dhinf/lmi.h"
#include "dhinf/model.h"
#include "dhinf/sdp.h"
#include "dhinf/verify.h"

namespace dhinf {

/// Condition number above which Q or S counts as numerically singular.
inline constexpr double kSingularCondition = 1e12;

enum class SynthesisStatus { kSuccess, kInfeasible, kNumericalFailure };

std::string_view ToString(SynthesisStatus status);

struct Certificate {
  MatrixXd L, Q, R, S, Z;
  double eps = 0.0;
  /// gamma^2 when it was a decision variable.
  std::optional<double> t;
};

struct SynthesisDiagnostics {
  bool causally_controllable = true;
  double cond_Q = 0.0;
  double cond_S = 0.0;
  double lambda_min_L = 0.0;
  /// Margin of the solver point and of the final (regularized) certificate.
  double solver_margin = 0.0;
  double certificate_margin = 0.0;
  /// Absolute strictness of the program.
  double delta = 0.0;
  int iterations = 0;
  std::string solver_status;
  std::string solver_message;
  std::vector<std::string> warnings;
};

struct SynthesisResult {
  SynthesisStatus status = SynthesisStatus::kNumericalFailure;
  /// Empty unless a certificate was recovered.
  MatrixXd F;
  double gamma = 0.0;
  double alpha = 0.0;
  bool minimized = false;
  Certificate certificate;
  bool s_regularized = false;
  double s_shift = 0.0;
  SynthesisDiagnostics diagnostics;
  std::string message;
  /// Filled by callers that run the closed-loop check.
  std::optional<RobustnessReport> verification;

  bool has_gain() const { return F.size() > 0; }
};

/// Fixed-gamma synthesis. alpha > 0 selects the alpha-extended program and
/// throws InvalidAlphaPath unless uncertainty is confined to A.
SynthesisResult Synthesize(const UncertainPlant& plant, double gamma,
                           double alpha = 0.0, const SolverConfig& config = {});

/// Minimizes t = gamma^2 and reports gamma = sqrt(t*).
SynthesisResult SynthesizeOptimal(const UncertainPlant& plant, double alpha = 0.0,
                                  const SolverConfig& config = {});

struct SRegularization {
  VectorXd x;
  bool applied = false;
  double shift = 0.0;
  double margin = 0.0;
};

/// If S (variable block "S") is numerically singular, replaces it by S + e I
/// with e = 2^-k ||S||_2 (||S||_2 taken as 1 when S = 0), k = 4..40, taking the
/// first e that leaves S well conditioned and the margin at least delta / 4.
/// nullopt when every trial fails.
std::optional<SRegularization> RegularizeS(const AffineMatrixInequality& ami,
                                           const VectorXd& x, double delta);

/// F = Z^T [Q R; 0 S]^-T V^-1. Throws NumericalError for singular Q or S.
MatrixXd RecoverGain(const MatrixXd& Q, const MatrixXd& R, const MatrixXd& S,
                     const MatrixXd& Z, const MatrixXd& V);

/// A <- A + Bu F; everything else unchanged.
DescriptorPlant ClosedLoop(const DescriptorPlant& plant, const MatrixXd& F);
UncertainPlant ClosedLoop(const UncertainPlant& plant, const MatrixXd& F);

/// sigma_max / sigma_min; 1 for an empty matrix, +inf if singular.
double ConditionNumber(const MatrixXd& M);

nlohmann::json SynthesisResultToJson(const SynthesisResult& result);

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dhinf
