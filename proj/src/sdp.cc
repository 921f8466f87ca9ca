#include "dhinf/sdp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Eigenvalues>

#include "dhinf/model.h"

namespace dhinf {
namespace {

using Blocks = std::vector<MatrixXd>;

constexpr double kLooseTol = 1e-6;
// The multiplier residual floors near 1e-6 on degenerate programs once the
// Schur complement loses accuracy; x itself is still checked directly.
constexpr double kLoosePrimalTol = 1e-5;
// A stalled phase one this close to optimal is still trusted to call a
// problem infeasible.
constexpr double kStallGap = 1e-3;
constexpr int kStallIterations = 8;

double LambdaMax(const MatrixXd& S) {
  if (S.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double SpectralNorm(const MatrixXd& S) {
  if (S.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double Inner(const Blocks& X, const Blocks& Y) {
  double v = 0.0;
  for (std::size_t b = 0; b < X.size(); ++b) v += X[b].cwiseProduct(Y[b]).sum();
  return v;
}

double FrobeniusNorm(const Blocks& X) {
  double v = 0.0;
  for (const auto& B : X) v += B.squaredNorm();
  return std::sqrt(v);
}

// Dual standard form: maximize b^T y subject to C - sum_i y_i A_i >= 0 with
// block-diagonal data. A[i][b] may be an empty matrix, meaning zero.
struct ConicData {
  Blocks C;
  std::vector<Blocks> A;
  VectorXd b;
};

struct IpmResult {
  VectorXd y;
  bool converged = false;
  // Stalled or hit the limit with small residuals (see kLoosePrimalTol).
  bool near_converged = false;
  bool unbounded = false;
  bool breakdown = false;
  int iterations = 0;
  double pinf = 0.0, dinf = 0.0, gap = 0.0;
};

// Largest step a such that X + a dX stays positive semidefinite (inf if any).
double MaxStep(const MatrixXd& X, const MatrixXd& dX) {
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const auto L = llt.matrixL();
  MatrixXd W = L.solve(dX);
  W = L.solve(MatrixXd(W.transpose()));
  W = 0.5 * (W + W.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(W, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double MaxStep(const Blocks& X, const Blocks& dX) {
  double step = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < X.size(); ++b) step = std::min(step, MaxStep(X[b], dX[b]));
  return step;
}

bool Present(const MatrixXd& M) { return M.size() > 0; }

// Infeasible-start primal-dual path following with the HKM direction and
// Mehrotra predictor-corrector steps.
IpmResult RunIpmCore(const ConicData& d, const SolverConfig& cfg) {
  const std::size_t nb = d.C.size();
  const int nv = static_cast<int>(d.b.size());
  double total_dim = 0.0;
  double cnorm = FrobeniusNorm(d.C);
  for (const auto& C : d.C) total_dim += static_cast<double>(C.rows());

  const double init = 10.0;
  Blocks X(nb), Z(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    X[b] = init * MatrixXd::Identity(d.C[b].rows(), d.C[b].rows());
    Z[b] = X[b];
  }
  VectorXd y = VectorXd::Zero(nv);

  const auto apply_adjoint = [&](const VectorXd& v) {
    Blocks out(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      out[b] = MatrixXd::Zero(d.C[b].rows(), d.C[b].cols());
      for (int i = 0; i < nv; ++i) {
        if (Present(d.A[i][b]) && v(i) != 0.0) out[b] += v(i) * d.A[i][b];
      }
    }
    return out;
  };
  const auto apply_op = [&](const Blocks& M) {
    VectorXd out = VectorXd::Zero(nv);
    for (int i = 0; i < nv; ++i) {
      for (std::size_t b = 0; b < nb; ++b) {
        // trace(A M) with A symmetric.
        if (Present(d.A[i][b])) out(i) += d.A[i][b].cwiseProduct(M[b].transpose()).sum();
      }
    }
    return out;
  };

  IpmResult res;
  const double bnorm = d.b.norm();
  // Best iterate so far; returned on every exit short of convergence.
  IpmResult best;
  double best_worst = std::numeric_limits<double>::infinity();
  double progress_level = best_worst;
  int last_progress = 0;
  const auto stop = [&](int iter, bool breakdown) {
    IpmResult out = best_worst < std::numeric_limits<double>::infinity() ? best : res;
    out.iterations = iter;
    out.breakdown = breakdown;
    return out;
  };
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    res.iterations = iter;
    const VectorXd Rp = d.b - apply_op(X);
    Blocks Rd = apply_adjoint(y);
    for (std::size_t b = 0; b < nb; ++b) Rd[b] = d.C[b] - Rd[b] - Z[b];
    const double xz = Inner(X, Z);
    const double mu = xz / total_dim;
    const double pobj = Inner(d.C, X);
    const double dobj = d.b.dot(y);
    res.pinf = Rp.norm() / (1.0 + bnorm);
    res.dinf = FrobeniusNorm(Rd) / (1.0 + cnorm);
    // Complementarity; pobj - dobj is polluted by pinf * |y| when the
    // multiplier is large.
    res.gap = std::abs(xz) / (1.0 + std::abs(pobj) + std::abs(dobj));
    res.y = y;
    if (res.pinf < cfg.tol && res.dinf < cfg.tol && res.gap < cfg.tol) {
      res.converged = true;
      return res;
    }
    if (!y.allFinite() || y.cwiseAbs().maxCoeff() > 1e12) {
      res.unbounded = true;
      return res;
    }
    const double worst = std::max({res.pinf, res.dinf, res.gap});
    if (worst < best_worst) {
      best = res;
      best_worst = worst;
    }
    if (worst < 0.5 * progress_level) {
      progress_level = worst;
      last_progress = iter;
    } else if (iter - last_progress >= kStallIterations) {
      return stop(iter, false);
    }

    Blocks Zinv(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      Eigen::LLT<MatrixXd> llt(Z[b]);
      if (llt.info() != Eigen::Success) {
        return stop(iter, true);
      }
      Zinv[b] = llt.solve(MatrixXd::Identity(Z[b].rows(), Z[b].cols()));
    }

    // Schur complement M_ij = trace(A_i X A_j Z^-1).
    std::vector<Blocks> G(nv, Blocks(nb));
    for (int j = 0; j < nv; ++j) {
      for (std::size_t b = 0; b < nb; ++b) {
        if (Present(d.A[j][b])) G[j][b] = X[b] * d.A[j][b] * Zinv[b];
      }
    }
    MatrixXd M = MatrixXd::Zero(nv, nv);
    for (int i = 0; i < nv; ++i) {
      for (int j = i; j < nv; ++j) {
        double v = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
          if (Present(d.A[i][b]) && Present(G[j][b])) {
            v += d.A[i][b].cwiseProduct(G[j][b].transpose()).sum();
          }
        }
        M(i, j) = v;
        M(j, i) = v;
      }
    }
    const double diag_max = nv > 0 ? M.diagonal().cwiseAbs().maxCoeff() : 1.0;
    M.diagonal().array() += 1e-14 * std::max(diag_max, 1.0);
    Eigen::LDLT<MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success) {
      return stop(iter, true);
    }

    struct Direction {
      VectorXd dy;
      Blocks dX, dZ;
    };
    const auto direction = [&](const Blocks& Rc) {
      Blocks H(nb);
      for (std::size_t b = 0; b < nb; ++b) H[b] = (Rc[b] - X[b] * Rd[b]) * Zinv[b];
      Direction dir;
      dir.dy = ldlt.solve(Rp - apply_op(H));
      dir.dZ = apply_adjoint(dir.dy);
      dir.dX.resize(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        dir.dZ[b] = Rd[b] - dir.dZ[b];
        MatrixXd dX = (Rc[b] - X[b] * dir.dZ[b]) * Zinv[b];
        dir.dX[b] = 0.5 * (dX + dX.transpose());
      }
      return dir;
    };

    Blocks Rc(nb);
    for (std::size_t b = 0; b < nb; ++b) Rc[b] = -X[b] * Z[b];
    const Direction pred = direction(Rc);
    const double ap_aff = std::min(1.0, MaxStep(X, pred.dX));
    const double ad_aff = std::min(1.0, MaxStep(Z, pred.dZ));
    double mu_aff = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      mu_aff += (X[b] + ap_aff * pred.dX[b]).cwiseProduct(Z[b] + ad_aff * pred.dZ[b]).sum();
    }
    mu_aff /= total_dim;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    for (std::size_t b = 0; b < nb; ++b) {
      Rc[b] = sigma * mu * MatrixXd::Identity(X[b].rows(), X[b].cols()) -
              X[b] * Z[b] - pred.dX[b] * pred.dZ[b];
    }
    const Direction corr = direction(Rc);
    if (!corr.dy.allFinite()) {
      return stop(iter, true);
    }
    const double tau = 0.95;
    const double ap = std::min(1.0, tau * MaxStep(X, corr.dX));
    const double ad = std::min(1.0, tau * MaxStep(Z, corr.dZ));
    if (ap < 1e-10 && ad < 1e-10) {
      return stop(iter, true);
    }
    for (std::size_t b = 0; b < nb; ++b) {
      X[b] += ap * corr.dX[b];
      Z[b] += ad * corr.dZ[b];
    }
    y += ad * corr.dy;
  }
  return stop(cfg.max_iter, false);
}

IpmResult RunIpm(const ConicData& d, const SolverConfig& cfg) {
  IpmResult res = RunIpmCore(d, cfg);
  res.near_converged = !res.converged && !res.unbounded && res.pinf < kLoosePrimalTol &&
                       std::max(res.dinf, res.gap) < kLooseTol;
  return res;
}

// Per-block and per-variable scaling of an SdpProblem.
struct Scaling {
  std::vector<double> block;  // F_b is divided by block[b]
  VectorXd var;               // x_i = var(i) * x_scaled(i); 0 drops the variable
};

Scaling ComputeScaling(const SdpProblem& p) {
  Scaling s;
  for (const auto& blk : p.blocks) s.block.push_back(1.0 + SpectralNorm(blk.constant));
  s.var = VectorXd::Zero(p.num_vars);
  for (int i = 0; i < p.num_vars; ++i) {
    double sq = 0.0;
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
      sq += p.blocks[b].coefficients[i].squaredNorm() / (s.block[b] * s.block[b]);
    }
    if (sq > 0.0) s.var(i) = 1.0 / std::sqrt(sq);
  }
  return s;
}

// Builds conic data over the kept (nonzero-column) variables. When
// with_epigraph is set an extra variable t is appended: every block reads
// F_b(x) - t I <= 0 and a 1x1 block enforces t >= -1.
ConicData BuildConic(const SdpProblem& p, const Scaling& s,
                     const std::vector<int>& kept, double shift,
                     bool with_epigraph) {
  ConicData d;
  const std::size_t nb = p.blocks.size();
  const int nk = static_cast<int>(kept.size());
  const int ny = nk + (with_epigraph ? 1 : 0);
  d.A.assign(ny, Blocks(nb + (with_epigraph ? 1 : 0)));
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& blk = p.blocks[b];
    const auto dim = blk.constant.rows();
    d.C.push_back(-(blk.constant + shift * MatrixXd::Identity(dim, dim)) / s.block[b]);
    for (int k = 0; k < nk; ++k) {
      const MatrixXd& F = blk.coefficients[kept[k]];
      if (!F.isZero(0.0)) d.A[k][b] = F * (s.var(kept[k]) / s.block[b]);
    }
    if (with_epigraph) d.A[nk][b] = -MatrixXd::Identity(dim, dim);
  }
  if (with_epigraph) {
    d.C.push_back(MatrixXd::Ones(1, 1));
    d.A[nk][nb] = -MatrixXd::Ones(1, 1);
    d.b = VectorXd::Zero(ny);
    d.b(nk) = -1.0;
  }
  return d;
}

std::vector<int> KeptVariables(const Scaling& s) {
  std::vector<int> kept;
  for (int i = 0; i < s.var.size(); ++i) {
    if (s.var(i) > 0.0) kept.push_back(i);
  }
  return kept;
}

VectorXd Unscale(const VectorXd& y, const Scaling& s, const std::vector<int>& kept,
                 int num_vars) {
  VectorXd x = VectorXd::Zero(num_vars);
  for (std::size_t k = 0; k < kept.size(); ++k) x(kept[k]) = s.var(kept[k]) * y(k);
  return x;
}

void CopyDiagnostics(const IpmResult& ipm, SdpSolution& sol) {
  sol.iterations += ipm.iterations;
  sol.primal_infeasibility = ipm.pinf;
  sol.dual_infeasibility = ipm.dinf;
  sol.relative_gap = ipm.gap;
}

}  // namespace

std::string_view ToString(SdpStatus status) {
  switch (status) {
    case SdpStatus::kFeasible: return "feasible";
    case SdpStatus::kInfeasible: return "infeasible";
    case SdpStatus::kMarginal: return "marginal";
    case SdpStatus::kNumericalFailure: return "numerical_failure";
    case SdpStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

SdpProblem SdpProblem::Make(int num_vars, std::vector<ConstraintBlock> blocks,
                            double relative_margin, VectorXd objective) {
  if (blocks.empty()) throw DimensionError("an SDP needs at least one block");
  if (num_vars < 0) throw DimensionError("negative variable count");
  double f0max = 0.0;
  for (const auto& blk : blocks) {
    const auto dim = blk.constant.rows();
    if (blk.constant.cols() != dim) throw DimensionError("constraint blocks must be square");
    if (static_cast<int>(blk.coefficients.size()) != num_vars) {
      throw DimensionError("one coefficient matrix per variable is required");
    }
    const auto check_sym = [](const MatrixXd& M) {
      if (!(M - M.transpose()).isZero(1e-12 * (1.0 + M.norm()))) {
        throw DimensionError("constraint matrices must be symmetric");
      }
    };
    check_sym(blk.constant);
    for (const auto& F : blk.coefficients) {
      if (F.rows() != dim || F.cols() != dim) throw DimensionError("coefficient size mismatch");
      check_sym(F);
    }
    f0max = std::max(f0max, SpectralNorm(blk.constant));
  }
  if (objective.size() == 0) objective = VectorXd::Zero(num_vars);
  if (objective.size() != num_vars) throw DimensionError("objective length mismatch");
  SdpProblem p;
  p.num_vars = num_vars;
  p.objective = std::move(objective);
  p.blocks = std::move(blocks);
  p.margin = relative_margin * (1.0 + f0max);
  return p;
}

MarginReport VerifySolution(const SdpProblem& problem, const VectorXd& x) {
  if (x.size() != problem.num_vars) throw DimensionError("solution length mismatch");
  MarginReport rep;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& blk : problem.blocks) {
    MatrixXd F = blk.constant;
    for (int i = 0; i < problem.num_vars; ++i) {
      if (x(i) != 0.0) F += x(i) * blk.coefficients[i];
    }
    F = 0.5 * (F + F.transpose());
    const double lmax = LambdaMax(F);
    rep.block_max_eigenvalues.push_back(lmax);
    worst = std::max(worst, lmax);
  }
  rep.margin = -worst;
  return rep;
}

SdpSolution SolveFeasibility(const SdpProblem& problem, const SolverConfig& config) {
  const Scaling scaling = ComputeScaling(problem);
  const std::vector<int> kept = KeptVariables(scaling);
  const ConicData data = BuildConic(problem, scaling, kept, 0.0, true);
  const IpmResult ipm = RunIpm(data, config);

  SdpSolution sol;
  CopyDiagnostics(ipm, sol);
  sol.x = Unscale(ipm.y, scaling, kept, problem.num_vars);
  sol.margin = VerifySolution(problem, sol.x).margin;
  sol.objective = problem.objective.dot(sol.x);
  const double delta = problem.margin;
  if (sol.margin >= 0.5 * delta) {
    sol.status = SdpStatus::kFeasible;
  } else if (!ipm.converged && !ipm.near_converged && !ipm.unbounded &&
             !(std::max(ipm.pinf, ipm.dinf) < kLooseTol && ipm.gap < kStallGap)) {
    sol.status = SdpStatus::kNumericalFailure;
    sol.message = ipm.breakdown ? "interior-point breakdown" : "iteration limit reached";
  } else if (sol.margin > -delta) {
    sol.status = SdpStatus::kMarginal;
  } else {
    sol.status = SdpStatus::kInfeasible;
  }
  return sol;
}

SdpSolution MinimizeLinear(const SdpProblem& problem, const VectorXd& c,
                           const SolverConfig& config) {
  if (c.size() != problem.num_vars) throw DimensionError("objective length mismatch");
  SdpSolution phase1 = SolveFeasibility(problem, config);
  if (phase1.status != SdpStatus::kFeasible) {
    phase1.objective = c.dot(phase1.x);
    return phase1;
  }

  const Scaling scaling = ComputeScaling(problem);
  const std::vector<int> kept = KeptVariables(scaling);
  for (int i = 0; i < problem.num_vars; ++i) {
    if (scaling.var(i) == 0.0 && c(i) != 0.0) {
      SdpSolution sol = phase1;
      sol.status = SdpStatus::kUnbounded;
      sol.message = "objective variable does not enter any constraint";
      return sol;
    }
  }
  ConicData data = BuildConic(problem, scaling, kept, problem.margin, false);
  data.b = VectorXd::Zero(static_cast<int>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    data.b(k) = -c(kept[k]) * scaling.var(kept[k]);
  }
  const IpmResult ipm = RunIpm(data, config);

  SdpSolution sol;
  sol.iterations = phase1.iterations;
  CopyDiagnostics(ipm, sol);
  sol.x = Unscale(ipm.y, scaling, kept, problem.num_vars);
  sol.margin = VerifySolution(problem, sol.x).margin;
  sol.objective = c.dot(sol.x);
  if (ipm.unbounded) {
    sol.status = SdpStatus::kUnbounded;
    sol.message = "objective unbounded below";
  } else if (sol.margin >= 0.5 * problem.margin && (ipm.converged || ipm.near_converged)) {
    sol.status = SdpStatus::kFeasible;
    if (!ipm.converged) sol.message = "stopped at reduced accuracy";
  } else {
    // Keep the verified phase-one point; it is feasible but not optimal.
    sol = phase1;
    sol.objective = c.dot(sol.x);
    sol.status = SdpStatus::kNumericalFailure;
    sol.message = ipm.breakdown ? "interior-point breakdown during minimization"
                                : "minimization did not converge";
  }
  return sol;
}

}  // namespace dhinf
