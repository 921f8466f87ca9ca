#include "dhinf/lmi.h"

#include <algorithm>
#include <numeric>

#include "dhinf/json_io.h"

namespace dhinf {

void VariableLayout::Add(std::string name, int rows, int cols, bool symmetric) {
  if (Has(name)) throw DimensionError("duplicate variable block " + name);
  if (symmetric && rows != cols) throw DimensionError("symmetric block must be square");
  VariableBlock b;
  b.name = std::move(name);
  b.rows = rows;
  b.cols = cols;
  b.symmetric = symmetric;
  b.offset = size_;
  b.count = symmetric ? rows * (rows + 1) / 2 : rows * cols;
  size_ += b.count;
  blocks_.push_back(std::move(b));
}

VariableLayout VariableLayout::Certificate(int r, int n, int m, bool with_eps,
                                           bool with_t) {
  VariableLayout layout;
  layout.Add("L", r, r, true);
  layout.Add("Q", r, r);
  layout.Add("R", r, n - r);
  layout.Add("S", n - r, n - r);
  if (m > 0) layout.Add("Z", n, m);
  if (with_eps) layout.Add("eps", 1, 1);
  if (with_t) layout.Add("t", 1, 1);
  return layout;
}

bool VariableLayout::Has(const std::string& name) const {
  return std::any_of(blocks_.begin(), blocks_.end(),
                     [&](const VariableBlock& b) { return b.name == name; });
}

const VariableBlock& VariableLayout::Get(const std::string& name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw DimensionError("no variable block named " + name);
}

int VariableLayout::Index(const std::string& name, int i, int j) const {
  const VariableBlock& b = Get(name);
  if (i < 0 || j < 0 || i >= b.rows || j >= b.cols) {
    throw DimensionError("entry outside variable block " + name);
  }
  if (!b.symmetric) return b.offset + i * b.cols + j;
  if (i > j) std::swap(i, j);
  // Row-major upper triangle.
  return b.offset + i * b.rows - i * (i - 1) / 2 + (j - i);
}

AffineMatrix VariableLayout::Matrix(const std::string& name) const {
  const VariableBlock& b = Get(name);
  AffineMatrix out(b.rows, b.cols, size_);
  for (int i = 0; i < b.rows; ++i) {
    for (int j = b.symmetric ? i : 0; j < b.cols; ++j) {
      MatrixXd unit = MatrixXd::Zero(b.rows, b.cols);
      unit(i, j) = 1.0;
      if (b.symmetric) unit(j, i) = 1.0;
      out.AddTerm(Index(name, i, j), unit);
    }
  }
  return out;
}

MatrixXd VariableLayout::Extract(const std::string& name, const VectorXd& x) const {
  const VariableBlock& b = Get(name);
  if (x.size() != size_) throw DimensionError("variable vector length mismatch");
  MatrixXd M(b.rows, b.cols);
  for (int i = 0; i < b.rows; ++i) {
    for (int j = 0; j < b.cols; ++j) M(i, j) = x(Index(name, i, j));
  }
  return M;
}

void VariableLayout::Assign(const std::string& name, const MatrixXd& value,
                            VectorXd& x) const {
  const VariableBlock& b = Get(name);
  if (value.rows() != b.rows || value.cols() != b.cols) {
    throw DimensionError("value shape does not match block " + name);
  }
  for (int i = 0; i < b.rows; ++i) {
    for (int j = b.symmetric ? i : 0; j < b.cols; ++j) x(Index(name, i, j)) = value(i, j);
  }
}

int AffineMatrixInequality::Dimension() const {
  int dim = 0;
  for (const auto& b : blocks) dim += static_cast<int>(b.data.constant.rows());
  return dim;
}

std::vector<MatrixXd> AffineMatrixInequality::Evaluate(const VectorXd& x) const {
  std::vector<MatrixXd> out;
  for (const auto& b : blocks) {
    MatrixXd F = b.data.constant;
    for (int i = 0; i < layout.size(); ++i) F += x(i) * b.data.coefficients[i];
    out.push_back(std::move(F));
  }
  return out;
}

const LmiBlock& AffineMatrixInequality::Block(const std::string& name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw DimensionError("no constraint block named " + name);
}

SdpProblem AffineMatrixInequality::ToSdp(const SolverConfig& config) const {
  std::vector<ConstraintBlock> data;
  for (const auto& b : blocks) data.push_back(b.data);
  return SdpProblem::Make(layout.size(), std::move(data), config.margin);
}

VectorXd AffineMatrixInequality::GammaSquaredObjective() const {
  VectorXd c = VectorXd::Zero(layout.size());
  c(layout.Index("t", 0, 0)) = 1.0;
  return c;
}

nlohmann::json AffineMatrixInequality::ToJson() const {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& b : layout.blocks()) {
    vars.push_back({{"name", b.name},
                    {"rows", b.rows},
                    {"cols", b.cols},
                    {"symmetric", b.symmetric},
                    {"offset", b.offset},
                    {"count", b.count}});
  }
  nlohmann::json blks = nlohmann::json::array();
  for (const auto& b : blocks) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& F : b.data.coefficients) coeffs.push_back(MatrixToJson(F));
    blks.push_back({{"name", b.name},
                    {"partition", b.partition},
                    {"F0", MatrixToJson(b.data.constant)},
                    {"F", std::move(coeffs)}});
  }
  return {{"dimension", Dimension()},
          {"num_vars", layout.size()},
          {"variables", std::move(vars)},
          {"blocks", std::move(blks)}};
}

LmiBlock MakeLmiBlock(std::string name, std::vector<int> partition,
                      const AffineMatrix& F) {
  if (F.rows() != F.cols()) throw DimensionError("LMI block must be square");
  if (std::accumulate(partition.begin(), partition.end(), 0) != F.rows()) {
    throw DimensionError("partition does not match block size");
  }
  const auto exact_sym = [](const MatrixXd& M) { return M == M.transpose(); };
  if (!exact_sym(F.constant())) throw DimensionError(name + ": constant is not symmetric");
  LmiBlock block;
  block.name = std::move(name);
  block.partition = std::move(partition);
  block.data.constant = F.constant();
  block.data.coefficients.reserve(F.num_vars());
  for (int i = 0; i < F.num_vars(); ++i) {
    MatrixXd coeff = F.Coefficient(i);
    if (!exact_sym(coeff)) throw DimensionError(block.name + ": coefficient is not symmetric");
    block.data.coefficients.push_back(std::move(coeff));
  }
  return block;
}

AffineMatrix AbsorbUncertainty(const AffineMatrix& G, const AffineMatrix& M,
                               const MatrixXd& N, int eps_index) {
  const int nv = G.num_vars();
  const auto k = M.cols();
  if (N.rows() != k || N.cols() != G.cols() || M.rows() != G.rows()) {
    throw DimensionError("uncertainty factor shapes do not match");
  }
  MatrixXd NtN = N.transpose() * N;
  NtN = 0.5 * (NtN + NtN.transpose());
  AffineMatrix top = G;
  top.AddTerm(eps_index, NtN);
  AffineMatrix corner(k, k, nv);
  corner.AddTerm(eps_index, -MatrixXd::Identity(k, k));
  return AffineMatrix::Blocks({{top, M}, {M.transpose(), corner}});
}

namespace {

// Structured pieces shared by every assembly.
struct Pieces {
  int nv, r, n;
  AffineMatrix L, Q, Gamma, Pi, Theta;

  Pieces(const SvdEquivalentForm& form, const VariableLayout& layout)
      : nv(layout.size()), r(form.r), n(form.n) {
    const int k = n - r;
    L = layout.Matrix("L");
    Q = layout.Matrix("Q");
    const AffineMatrix R = layout.Matrix("R");
    const AffineMatrix S = layout.Matrix("S");
    Gamma = AffineMatrix::Blocks({{Q, R}});
    Pi = AffineMatrix::Blocks({{Zero(r, r), Zero(r, k)}, {Zero(k, r), S}});
    Theta = AffineMatrix::Blocks({{L, Zero(r, k)}, {Zero(k, r), Zero(k, k)}});
  }

  AffineMatrix Zero(Eigen::Index rows, Eigen::Index cols) const {
    return AffineMatrix::Zero(rows, cols, nv);
  }
  AffineMatrix Const(const MatrixXd& M) const { return AffineMatrix::Constant(M, nv); }
  AffineMatrix Identity(int dim, double scale) const {
    return Const(scale * MatrixXd::Identity(dim, dim));
  }
};

AffineMatrix GammaBlock(const VariableLayout& layout, std::optional<double> gamma,
                        int dim) {
  if (gamma) {
    if (!(*gamma > 0.0)) throw DimensionError("gamma must be positive");
    return AffineMatrix::Constant(-(*gamma) * (*gamma) * MatrixXd::Identity(dim, dim),
                                  layout.size());
  }
  AffineMatrix g(dim, dim, layout.size());
  g.AddTerm(layout.Index("t", 0, 0), -MatrixXd::Identity(dim, dim));
  return g;
}

void AppendPositiveL(AffineMatrixInequality& ami) {
  const VariableBlock& L = ami.layout.Get("L");
  if (L.rows == 0) return;
  ami.blocks.push_back(MakeLmiBlock("L>0", {L.rows}, -ami.layout.Matrix("L")));
}

MatrixXd DiagonalProjector(int r, int n) {
  MatrixXd Phi = MatrixXd::Zero(n, n);
  Phi.bottomRightCorner(n - r, n - r).setIdentity();
  return Phi;
}

MatrixXd LeadingSelector(int r, int n) {
  MatrixXd Omega = MatrixXd::Zero(r, n);
  Omega.leftCols(r).setIdentity();
  return Omega;
}

// Synthesis matrix on the dual closed loop, block rows (r, n, p, r, q). With
// alpha != 0 the alpha-extended (5,2) and (5,3) blocks are used.
AffineMatrix SynthesisMatrix(const SvdEquivalentForm& f, const VariableLayout& layout,
                             std::optional<double> gamma, double alpha) {
  const Pieces P(f, layout);
  const int r = f.r, n = f.n, p = f.p(), q = f.q();
  const AffineMatrix Z = layout.Matrix("Z");
  const MatrixXd Phi = DiagonalProjector(r, n);
  const MatrixXd Omega = LeadingSelector(r, n);
  const MatrixXd AdT = f.Ad.transpose();
  const MatrixXd BudT = f.Bud.transpose();
  const MatrixXd BwdT = f.Bwd.transpose();

  const AffineMatrix GammaT = P.Gamma.transpose();
  const AffineMatrix l11 = -0.5 * P.Q.Sym();
  const AffineMatrix l21 = f.Ad * GammaT + f.Bud * Z.transpose() * Omega.transpose();
  const AffineMatrix l31 = f.Cd * GammaT;
  const AffineMatrix l41 = P.L - P.Q - 0.5 * P.Q.transpose();
  const AffineMatrix l22 = (P.Pi * AdT).Sym() + (Phi * Z * BudT).Sym() - P.Theta;
  const AffineMatrix l32 = f.Cd * P.Pi.transpose();
  AffineMatrix l52 = P.Const(BwdT);
  AffineMatrix l53 = P.Const(f.Dwd.transpose());
  if (alpha != 0.0) {
    l52 += alpha * (BwdT * P.Pi * AdT + BwdT * Phi.transpose() * Z * BudT);
    l53 += alpha * (BwdT * P.Pi * f.Cd.transpose());
  }

  return AffineMatrix::Blocks({
      {l11, l21.transpose(), l31.transpose(), l41.transpose(), P.Zero(r, q)},
      {l21, l22, l32.transpose(), l21, l52.transpose()},
      {l31, l32, GammaBlock(layout, gamma, p), l31, l53.transpose()},
      {l41, l21.transpose(), l31.transpose(), -P.Q.Sym(), P.Zero(r, q)},
      {P.Zero(q, r), l52, l53, P.Zero(q, r), P.Identity(q, -1.0)},
  });
}

// Columns of N2 for the synthesis program, one s-wide column per channel.
AffineMatrix SynthesisColumn(const Pieces& P, const SvdEquivalentForm& f,
                             const MatrixXd& NdT) {
  const int s = f.s;
  return AffineMatrix::Blocks({{P.Gamma * NdT},
                               {P.Pi * NdT},
                               {P.Zero(f.p(), s)},
                               {P.Gamma * NdT},
                               {P.Zero(f.q(), s)}});
}

AffineMatrix OutputColumn(const Pieces& P, const SvdEquivalentForm& f,
                          const AffineMatrix& bottom) {
  const int s = f.s;
  return AffineMatrix::Blocks({{P.Zero(f.r, s)},
                               {P.Zero(f.n, s)},
                               {P.Zero(f.p(), s)},
                               {P.Zero(f.r, s)},
                               {bottom}});
}

// 4s x N constant with `blocks[k]` placed in row block k at column block col[k]
// of the partition (r, n, x, r, y).
MatrixXd ChannelRows(const std::vector<int>& partition, int s,
                     const std::vector<std::pair<int, MatrixXd>>& rows) {
  const int total = std::accumulate(partition.begin(), partition.end(), 0);
  MatrixXd out = MatrixXd::Zero(4 * s, total);
  for (int k = 0; k < 4; ++k) {
    const auto& [col, M] = rows[k];
    const int offset = std::accumulate(partition.begin(), partition.begin() + col, 0);
    if (M.size() > 0) out.block(k * s, offset, s, partition[col]) = M;
  }
  return out;
}

AffineMatrixInequality FinishProgram(VariableLayout layout, std::string name,
                                     std::vector<int> partition,
                                     const AffineMatrix& main) {
  AffineMatrixInequality ami;
  ami.layout = std::move(layout);
  ami.blocks.push_back(MakeLmiBlock(std::move(name), std::move(partition), main));
  AppendPositiveL(ami);
  return ami;
}

void RequireUncertaintyOnlyInA(const SvdEquivalentForm& f) {
  for (const MatrixXd* M : {&f.MBd, &f.NBd, &f.MCd, &f.NCd, &f.MD, &f.ND}) {
    if (!M->isZero(0.0)) {
      throw InvalidAlphaPath("alpha-extended synthesis needs uncertainty confined to A");
    }
  }
}

}  // namespace

AffineMatrix NominalBrlMatrix(const SvdEquivalentForm& f, const VariableLayout& layout,
                              std::optional<double> gamma, double alpha) {
  const Pieces P(f, layout);
  const int r = f.r, q = f.q(), p = f.p();
  const MatrixXd& Bd = f.Bwd;

  const AffineMatrix GA = P.Gamma * f.Ad;
  const AffineMatrix GB = P.Gamma * Bd;
  const AffineMatrix PB = P.Pi * Bd;
  const AffineMatrix phi11 = -0.5 * P.Q.Sym();
  const AffineMatrix phi22 = (P.Pi * f.Ad).Sym() - P.Theta;
  const AffineMatrix phi41 = P.L - P.Q - 0.5 * P.Q.transpose();
  AffineMatrix phi52 = P.Const(f.Cd);
  AffineMatrix phi53 = P.Const(f.Dwd);
  if (alpha != 0.0) {
    phi52 += alpha * (f.Cd * P.Pi * f.Ad);
    phi53 += alpha * (f.Cd * P.Pi * Bd);
  }

  return AffineMatrix::Blocks({
      {phi11, GA, GB, phi41.transpose(), P.Zero(r, p)},
      {GA.transpose(), phi22, PB, GA.transpose(), phi52.transpose()},
      {GB.transpose(), PB.transpose(), GammaBlock(layout, gamma, q), GB.transpose(),
       phi53.transpose()},
      {phi41, GA, GB, -P.Q.Sym(), P.Zero(r, p)},
      {P.Zero(p, r), phi52, phi53, P.Zero(p, r), P.Identity(p, -1.0)},
  });
}

RobustFactors RobustBrlFactors(const SvdEquivalentForm& f, const VariableLayout& layout) {
  const Pieces P(f, layout);
  const int s = f.s, r = f.r, n = f.n, q = f.q(), p = f.p();
  const auto channel = [&](const MatrixXd& Md) {
    return AffineMatrix::Blocks(
        {{P.Gamma * Md}, {P.Pi * Md}, {P.Zero(q, s)}, {P.Gamma * Md}, {P.Zero(p, s)}});
  };
  const auto output = [&](const MatrixXd& Md) {
    return AffineMatrix::Blocks({{P.Zero(r, s)},
                                 {P.Zero(n, s)},
                                 {P.Zero(q, s)},
                                 {P.Zero(r, s)},
                                 {P.Const(Md)}});
  };
  RobustFactors out;
  out.M1 = AffineMatrix::Blocks(
      {{channel(f.MAd), channel(f.MBd), output(f.MCd), output(f.MD)}});
  out.N1 = ChannelRows({r, n, q, r, p}, s,
                       {{1, f.NAd}, {2, f.NBd}, {1, f.NCd}, {2, f.ND}});
  return out;
}

AffineMatrixInequality AssembleNominalBrl(const SvdEquivalentForm& form,
                                          std::optional<double> gamma, double alpha) {
  if (alpha < 0.0) throw DimensionError("alpha must be nonnegative");
  VariableLayout layout = VariableLayout::Certificate(form.r, form.n, 0, false, !gamma);
  const AffineMatrix main = NominalBrlMatrix(form, layout, gamma, alpha);
  return FinishProgram(std::move(layout), "brl",
                       {form.r, form.n, form.q(), form.r, form.p()}, main);
}

AffineMatrixInequality AssembleRobustBrl(const SvdEquivalentForm& form,
                                         std::optional<double> gamma) {
  const int s = form.s;
  VariableLayout layout = VariableLayout::Certificate(form.r, form.n, 0, s > 0, !gamma);
  AffineMatrix main = NominalBrlMatrix(form, layout, gamma, 0.0);
  std::vector<int> partition{form.r, form.n, form.q(), form.r, form.p()};
  if (s > 0) {
    const RobustFactors factors = RobustBrlFactors(form, layout);
    main = AbsorbUncertainty(main, factors.M1, factors.N1, layout.Index("eps", 0, 0));
    partition.push_back(4 * s);
  }
  return FinishProgram(std::move(layout), "robust_brl", std::move(partition), main);
}

namespace {

AffineMatrixInequality AssembleSynthesisImpl(const SvdEquivalentForm& f,
                                             std::optional<double> gamma,
                                             double alpha, bool alpha_path) {
  if (f.m() == 0) throw DimensionError("synthesis needs a control input matrix");
  const int s = f.s;
  VariableLayout layout = VariableLayout::Certificate(f.r, f.n, f.m(), s > 0, !gamma);
  AffineMatrix main = SynthesisMatrix(f, layout, gamma, alpha);
  std::vector<int> partition{f.r, f.n, f.p(), f.r, f.q()};
  if (s > 0) {
    const Pieces P(f, layout);
    AffineMatrix N2;
    MatrixXd M2;
    const MatrixXd MAdT = f.MAd.transpose();
    if (!alpha_path) {
      N2 = AffineMatrix::Blocks({{SynthesisColumn(P, f, f.NAd.transpose()),
                                  SynthesisColumn(P, f, f.NCd.transpose()),
                                  OutputColumn(P, f, P.Const(f.NBd.transpose())),
                                  OutputColumn(P, f, P.Const(f.ND.transpose()))}});
      M2 = ChannelRows(partition, s,
                       {{1, MAdT}, {2, f.MCd.transpose()}, {1, f.MBd.transpose()},
                        {2, f.MD.transpose()}});
    } else {
      const AffineMatrix third =
          alpha != 0.0 ? alpha * (f.Bwd.transpose() * P.Pi * f.NAd.transpose())
                       : P.Zero(f.q(), s);
      N2 = AffineMatrix::Blocks({{SynthesisColumn(P, f, f.NAd.transpose()),
                                  OutputColumn(P, f, P.Zero(f.q(), s)),
                                  OutputColumn(P, f, third),
                                  OutputColumn(P, f, P.Zero(f.q(), s))}});
      // The third channel pairs with alpha * Bwd^T Pi NAd^T; it carries no
      // uncertainty when alpha == 0.
      const MatrixXd none = MatrixXd::Zero(s, f.p());
      M2 = ChannelRows(partition, s,
                       {{1, MAdT},
                        {2, none},
                        {1, alpha != 0.0 ? MAdT : MatrixXd::Zero(s, f.n)},
                        {2, none}});
    }
    main = AbsorbUncertainty(main, N2, M2, layout.Index("eps", 0, 0));
    partition.push_back(4 * s);
  }
  return FinishProgram(std::move(layout), "synthesis", std::move(partition), main);
}

}  // namespace

AffineMatrixInequality AssembleSynthesis(const SvdEquivalentForm& form,
                                         std::optional<double> gamma) {
  return AssembleSynthesisImpl(form, gamma, 0.0, false);
}

AffineMatrixInequality AssembleSynthesisAlpha(const SvdEquivalentForm& form,
                                              std::optional<double> gamma,
                                              double alpha) {
  if (!(alpha >= 0.0)) throw InvalidAlphaPath("alpha must be nonnegative");
  RequireUncertaintyOnlyInA(form);
  return AssembleSynthesisImpl(form, gamma, alpha, true);
}

AffineMatrixInequality PetersenAbsorb(const MatrixXd& G, const MatrixXd& M,
                                      const MatrixXd& N) {
  if (G.rows() != G.cols() || M.rows() != G.rows() || N.cols() != G.cols()) {
    throw DimensionError("G, M, N shapes are inconsistent");
  }
  if (M.isZero(0.0) || N.isZero(0.0)) {
    throw DimensionError("Petersen's lemma needs nonzero M and N");
  }
  if (G != G.transpose()) throw DimensionError("G must be symmetric");
  AffineMatrixInequality ami;
  ami.layout.Add("eps", 1, 1);
  const int nv = ami.layout.size();
  const AffineMatrix main = AbsorbUncertainty(AffineMatrix::Constant(G, nv),
                                              AffineMatrix::Constant(M, nv), N, 0);
  ami.blocks.push_back(MakeLmiBlock(
      "petersen", {static_cast<int>(G.rows()), static_cast<int>(M.cols())}, main));
  return ami;
}

bool CheckNonconservativeRanks(const UncertainPlant& u, double rank_tol) {
  const DescriptorPlant& p = u.plant;
  const int n = p.n();
  MatrixXd left(n, n + p.C.rows() + u.NC.rows());
  left << p.E.transpose(), p.C.transpose(), u.NC.transpose();
  MatrixXd right(n, n + p.Bw.cols() + u.MB.cols());
  right << p.E, p.Bw, u.MB;
  const int rank_e = NumericalRank(p.E, rank_tol);
  return NumericalRank(left, rank_tol) == rank_e &&
         NumericalRank(right, rank_tol) == rank_e;
}

}  // namespace dhinf
