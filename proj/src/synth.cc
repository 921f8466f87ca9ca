#include "dhinf/synth.h"

#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "dhinf/json_io.h"

namespace dhinf {
namespace {

double LambdaMin(const MatrixXd& S) {
  if (S.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double SpectralNorm2(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues()(0);
}

AffineMatrixInequality AssembleFor(const SvdEquivalentForm& form,
                                   std::optional<double> gamma, double alpha) {
  if (!(alpha >= 0.0)) throw InvalidAlphaPath("alpha must be nonnegative");
  if (alpha > 0.0) return AssembleSynthesisAlpha(form, gamma, alpha);
  return AssembleSynthesis(form, gamma);
}

SynthesisResult Run(const UncertainPlant& plant, std::optional<double> gamma,
                    double alpha, const SolverConfig& config) {
  SynthesisResult res;
  res.alpha = alpha;
  res.minimized = !gamma;
  if (gamma) res.gamma = *gamma;
  const DescriptorPlant& p = plant.plant;
  if (p.Bu.isZero(0.0)) res.diagnostics.warnings.push_back("Bu is zero; the gain has no effect");

  res.diagnostics.causally_controllable = CheckCausalControllability(p.E, p.A, p.Bu);
  if (!res.diagnostics.causally_controllable) {
    res.diagnostics.warnings.push_back("plant is not causally controllable");
  }

  const SvdEquivalentForm form = ComputeSvdEquivalentForm(plant);
  const AffineMatrixInequality ami = AssembleFor(form, gamma, alpha);
  const SdpProblem problem = ami.ToSdp(config);
  const SdpSolution sol = gamma ? SolveFeasibility(problem, config)
                                : MinimizeLinear(problem, ami.GammaSquaredObjective(), config);

  auto& diag = res.diagnostics;
  diag.delta = problem.margin;
  diag.solver_margin = sol.margin;
  diag.iterations = sol.iterations;
  diag.solver_status = std::string(ToString(sol.status));
  diag.solver_message = sol.message;

  const bool certified = sol.margin >= 0.5 * problem.margin;
  if (!certified) {
    res.status = sol.status == SdpStatus::kNumericalFailure ? SynthesisStatus::kNumericalFailure
                                                            : SynthesisStatus::kInfeasible;
    res.message = "no certificate found";
    return res;
  }
  // A verified point whose optimization did not finish is still a sound
  // certificate; it is reported with its own gamma.
  res.status = sol.status == SdpStatus::kFeasible ? SynthesisStatus::kSuccess
                                                  : SynthesisStatus::kNumericalFailure;
  if (res.status != SynthesisStatus::kSuccess) res.message = sol.message;

  VectorXd x = sol.x;
  const VariableLayout& layout = ami.layout;
  Certificate& cert = res.certificate;
  cert.Q = layout.Extract("Q", x);
  diag.cond_Q = ConditionNumber(cert.Q);
  if (diag.cond_Q > kSingularCondition) {
    res.status = SynthesisStatus::kNumericalFailure;
    res.message = "Q is numerically singular";
    return res;
  }

  if (ConditionNumber(layout.Extract("S", x)) > kSingularCondition) {
    const auto reg = RegularizeS(ami, x, problem.margin);
    if (!reg) {
      res.status = SynthesisStatus::kNumericalFailure;
      res.message = "S could not be regularized";
      return res;
    }
    x = reg->x;
    res.s_regularized = reg->applied;
    res.s_shift = reg->shift;
  }

  cert.L = layout.Extract("L", x);
  cert.R = layout.Extract("R", x);
  cert.S = layout.Extract("S", x);
  cert.Z = layout.Extract("Z", x);
  if (layout.Has("eps")) cert.eps = x(layout.Index("eps", 0, 0));
  if (layout.Has("t")) {
    cert.t = x(layout.Index("t", 0, 0));
    res.gamma = std::sqrt(*cert.t);
  }
  diag.cond_S = ConditionNumber(cert.S);
  diag.lambda_min_L = LambdaMin(cert.L);
  diag.certificate_margin = VerifySolution(problem, x).margin;

  res.F = RecoverGain(cert.Q, cert.R, cert.S, cert.Z, form.V);
  return res;
}

}  // namespace

std::string_view ToString(SynthesisStatus status) {
  switch (status) {
    case SynthesisStatus::kSuccess: return "success";
    case SynthesisStatus::kInfeasible: return "infeasible";
    case SynthesisStatus::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

double ConditionNumber(const MatrixXd& M) {
  if (M.size() == 0) return 1.0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  const double lo = sv(sv.size() - 1);
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / lo;
}

SynthesisResult Synthesize(const UncertainPlant& plant, double gamma, double alpha,
                           const SolverConfig& config) {
  if (!(gamma > 0.0)) throw DimensionError("gamma must be positive");
  return Run(plant, gamma, alpha, config);
}

SynthesisResult SynthesizeOptimal(const UncertainPlant& plant, double alpha,
                                  const SolverConfig& config) {
  return Run(plant, std::nullopt, alpha, config);
}

std::optional<SRegularization> RegularizeS(const AffineMatrixInequality& ami,
                                           const VectorXd& x, double delta) {
  const VariableLayout& layout = ami.layout;
  const MatrixXd S = layout.Extract("S", x);
  SRegularization out;
  out.x = x;
  const SdpProblem problem = ami.ToSdp();
  if (ConditionNumber(S) <= kSingularCondition) {
    out.margin = VerifySolution(problem, x).margin;
    return out;
  }
  const double scale = S.isZero(0.0) ? 1.0 : SpectralNorm2(S);
  const MatrixXd I = MatrixXd::Identity(S.rows(), S.cols());
  for (int k = 4; k <= 40; ++k) {
    const double shift = std::ldexp(scale, -k);
    const MatrixXd Sbar = S + shift * I;
    if (ConditionNumber(Sbar) > kSingularCondition) continue;
    VectorXd trial = x;
    layout.Assign("S", Sbar, trial);
    const double margin = VerifySolution(problem, trial).margin;
    if (margin >= 0.25 * delta) {
      out.x = std::move(trial);
      out.applied = true;
      out.shift = shift;
      out.margin = margin;
      return out;
    }
  }
  return std::nullopt;
}

MatrixXd RecoverGain(const MatrixXd& Q, const MatrixXd& R, const MatrixXd& S,
                     const MatrixXd& Z, const MatrixXd& V) {
  const auto r = Q.rows(), k = S.rows(), n = r + k;
  if (Q.cols() != r || R.rows() != r || R.cols() != k || S.cols() != k ||
      Z.rows() != n || V.rows() != n || V.cols() != n) {
    throw DimensionError("certificate shapes are inconsistent");
  }
  if (ConditionNumber(Q) > kSingularCondition) throw NumericalError("Q is numerically singular");
  if (ConditionNumber(S) > kSingularCondition) throw NumericalError("S is numerically singular");

  // [Q R; 0 S] Y = Z with Y = F_d^T, then V^T F^T = Y.
  MatrixXd Y(n, Z.cols());
  if (k > 0) Y.bottomRows(k) = S.fullPivLu().solve(Z.bottomRows(k));
  if (r > 0) {
    MatrixXd rhs = Z.topRows(r);
    if (k > 0) rhs -= R * Y.bottomRows(k);
    Y.topRows(r) = Q.fullPivLu().solve(rhs);
  }
  return V.transpose().fullPivLu().solve(Y).transpose();
}

DescriptorPlant ClosedLoop(const DescriptorPlant& plant, const MatrixXd& F) {
  if (F.rows() != plant.m() || F.cols() != plant.n()) {
    throw DimensionError("gain must be m x n");
  }
  DescriptorPlant out = plant;
  out.A += plant.Bu * F;
  return out;
}

UncertainPlant ClosedLoop(const UncertainPlant& plant, const MatrixXd& F) {
  UncertainPlant out = plant;
  out.plant = ClosedLoop(plant.plant, F);
  return out;
}

nlohmann::json SynthesisResultToJson(const SynthesisResult& res) {
  nlohmann::json j;
  j["status"] = std::string(ToString(res.status));
  j["message"] = res.message;
  j["alpha"] = res.alpha;
  j["minimized"] = res.minimized;
  if (res.has_gain()) {
    j["gain"] = MatrixToJson(res.F);
    j["gamma"] = res.gamma;
    const Certificate& c = res.certificate;
    j["certificate"] = {{"L", MatrixToJson(c.L)}, {"Q", MatrixToJson(c.Q)},
                        {"R", MatrixToJson(c.R)}, {"S", MatrixToJson(c.S)},
                        {"Z", MatrixToJson(c.Z)}, {"eps", c.eps}};
    if (c.t) j["certificate"]["t"] = *c.t;
  } else {
    j["gain"] = nullptr;
    j["gamma"] = res.minimized ? nlohmann::json(nullptr) : nlohmann::json(res.gamma);
    j["certificate"] = nullptr;
  }
  j["s_regularized"] = {{"applied", res.s_regularized}, {"shift", res.s_shift}};
  const auto& d = res.diagnostics;
  const auto finite_or_null = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  j["diagnostics"] = {{"causally_controllable", d.causally_controllable},
                      {"cond_Q", finite_or_null(d.cond_Q)},
                      {"cond_S", finite_or_null(d.cond_S)},
                      {"lambda_min_L", finite_or_null(d.lambda_min_L)},
                      {"solver_margin", d.solver_margin},
                      {"certificate_margin", d.certificate_margin},
                      {"delta", d.delta},
                      {"iterations", d.iterations},
                      {"solver_status", d.solver_status},
                      {"solver_message", d.solver_message},
                      {"warnings", d.warnings}};
  j["verification"] = res.verification ? ReportToJson(*res.verification) : nullptr;
  return j;
}

}  // namespace dhinf
