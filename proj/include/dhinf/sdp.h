#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dhinf {

/// solver.margin, solver.max_iter, solver.tol.
struct SolverConfig {
  /// Relative strictness: "< 0" is enforced as "<= -delta I" with
  /// delta = margin * (1 + max_b ||F0_b||_2).
  double margin = 1e-7;
  int max_iter = 100;
  /// Relative infeasibility/gap tolerance of the interior-point iteration.
  double tol = 1e-9;
};

/// F0 + sum_i x_i F_i <= 0, all matrices symmetric and of equal size.
struct ConstraintBlock {
  Eigen::MatrixXd constant;
  std::vector<Eigen::MatrixXd> coefficients;
};

struct SdpProblem {
  int num_vars = 0;
  /// Objective c (minimize c^T x); zero for pure feasibility.
  Eigen::VectorXd objective;
  std::vector<ConstraintBlock> blocks;
  /// Absolute strictness delta.
  double margin = 0.0;

  /// Validates symmetry/shapes and sets the margin from the relative value.
  static SdpProblem Make(int num_vars, std::vector<ConstraintBlock> blocks,
                         double relative_margin = SolverConfig{}.margin,
                         Eigen::VectorXd objective = {});
};

enum class SdpStatus { kFeasible, kInfeasible, kMarginal, kNumericalFailure, kUnbounded };

std::string_view ToString(SdpStatus status);

struct SdpSolution {
  SdpStatus status = SdpStatus::kNumericalFailure;
  Eigen::VectorXd x;
  /// -max_b lambda_max(F_b(x)), recomputed on the unscaled problem.
  double margin = 0.0;
  double objective = 0.0;
  int iterations = 0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  std::string message;
};

struct MarginReport {
  /// -max over blocks of lambda_max.
  double margin = 0.0;
  std::vector<double> block_max_eigenvalues;
};

/// Independent recomputation with a symmetric eigendecomposition per block.
MarginReport VerifySolution(const SdpProblem& problem, const Eigen::VectorXd& x);

/// Maximizes the margin; kFeasible iff the best margin is at least delta / 2.
/// Non-feasible outcomes only mean that no certificate was found.
SdpSolution SolveFeasibility(const SdpProblem& problem,
                             const SolverConfig& config = {});

/// Minimizes c^T x over F(x) <= -delta I. Runs a feasibility phase first and
/// reports kInfeasible when it fails.
SdpSolution MinimizeLinear(const SdpProblem& problem, const Eigen::VectorXd& c,
                           const SolverConfig& config = {});

}  // namespace dhinf
