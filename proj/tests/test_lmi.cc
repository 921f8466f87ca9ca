#include <cmath>

#include <gtest/gtest.h>

#include "dhinf/demo.h"
#include "dhinf/lmi.h"
#include "dhinf/synth.h"
#include "dhinf/verify.h"
#include "support.h"

namespace dhinf {
namespace {

using testing::Gaussian;
using testing::MaxEig;
using testing::Rng;

// Dense block assembly; sizes are the row/column partition.
MatrixXd Dense(const std::vector<int>& sizes, const std::vector<std::vector<MatrixXd>>& blk) {
  int total = 0;
  for (int s : sizes) total += s;
  MatrixXd out = MatrixXd::Zero(total, total);
  int ro = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    int co = 0;
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      if (blk[i][j].size() > 0) out.block(ro, co, sizes[i], sizes[j]) = blk[i][j];
      co += sizes[j];
    }
    ro += sizes[i];
  }
  return out;
}

// Stacks column pieces into an (rows x s) matrix.
MatrixXd Stack(const std::vector<int>& sizes, int s, const std::vector<MatrixXd>& pieces) {
  int total = 0;
  for (int k : sizes) total += k;
  MatrixXd out = MatrixXd::Zero(total, s);
  int o = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (pieces[i].size() > 0) out.middleRows(o, sizes[i]) = pieces[i];
    o += sizes[i];
  }
  return out;
}

struct Vars {
  MatrixXd L, Q, R, S, Z;
  double eps = 0.0, t = 0.0;
};

Vars RandomVars(Rng& rng, int r, int n, int m) {
  Vars v;
  const MatrixXd G = Gaussian(rng, r, r);
  v.L = G * G.transpose() + MatrixXd::Identity(r, r);
  v.Q = Gaussian(rng, r, r);
  v.R = Gaussian(rng, r, n - r);
  v.S = Gaussian(rng, n - r, n - r);
  v.Z = Gaussian(rng, n, m);
  v.eps = 0.7;
  v.t = 3.3;
  return v;
}

VectorXd Pack(const VariableLayout& lay, const Vars& v) {
  VectorXd x = VectorXd::Zero(lay.size());
  lay.Assign("L", v.L, x);
  lay.Assign("Q", v.Q, x);
  lay.Assign("R", v.R, x);
  lay.Assign("S", v.S, x);
  if (lay.Has("Z")) lay.Assign("Z", v.Z, x);
  if (lay.Has("eps")) lay.Assign("eps", MatrixXd::Constant(1, 1, v.eps), x);
  if (lay.Has("t")) lay.Assign("t", MatrixXd::Constant(1, 1, v.t), x);
  return x;
}

struct Structure {
  MatrixXd Gam, Pi, Theta, Phi, Omega;
};

Structure Build(const Vars& v, int r, int n) {
  Structure s;
  s.Gam = MatrixXd(r, n);
  s.Gam << v.Q, v.R;
  s.Pi = MatrixXd::Zero(n, n);
  s.Pi.bottomRightCorner(n - r, n - r) = v.S;
  s.Theta = MatrixXd::Zero(n, n);
  s.Theta.topLeftCorner(r, r) = v.L;
  s.Phi = MatrixXd::Zero(n, n);
  s.Phi.bottomRightCorner(n - r, n - r).setIdentity();
  s.Omega = MatrixXd::Zero(r, n);
  s.Omega.leftCols(r).setIdentity();
  return s;
}

MatrixXd Id(int k) { return MatrixXd::Identity(k, k); }
MatrixXd Zr(int a, int b) { return MatrixXd::Zero(a, b); }

// Bounded real lemma matrix, rows (r, n, q, r, p).
MatrixXd DenseBrl(const SvdEquivalentForm& f, const Vars& v, double gamma2, double alpha) {
  const int r = f.r, n = f.n, q = f.q(), p = f.p();
  const Structure s = Build(v, r, n);
  const MatrixXd &A = f.Ad, &B = f.Bwd, &C = f.Cd, &D = f.Dwd;
  const MatrixXd S11 = -0.5 * v.Q - 0.5 * v.Q.transpose();
  const MatrixXd S41 = v.L - v.Q - 0.5 * v.Q.transpose();
  const MatrixXd S22 = s.Pi * A + A.transpose() * s.Pi.transpose() - s.Theta;
  const MatrixXd P52 = C + alpha * C * s.Pi * A;
  const MatrixXd P53 = D + alpha * C * s.Pi * B;
  const MatrixXd GA = s.Gam * A, GB = s.Gam * B;
  return Dense({r, n, q, r, p},
               {{S11, GA, GB, S41.transpose(), Zr(r, p)},
                {GA.transpose(), S22, s.Pi * B, GA.transpose(), P52.transpose()},
                {GB.transpose(), B.transpose() * s.Pi.transpose(), -gamma2 * Id(q),
                 GB.transpose(), P53.transpose()},
                {S41, GA, GB, -v.Q - v.Q.transpose(), Zr(r, p)},
                {Zr(p, r), P52, P53, Zr(p, r), -Id(p)}});
}

MatrixXd Absorbed(const MatrixXd& G, const MatrixXd& M, const MatrixXd& N, double eps) {
  const int k = static_cast<int>(M.cols());
  MatrixXd out(G.rows() + k, G.cols() + k);
  out << G + eps * N.transpose() * N, M, M.transpose(), -eps * Id(k);
  return out;
}

MatrixXd DenseRobustBrl(const SvdEquivalentForm& f, const Vars& v, double gamma2) {
  const int r = f.r, n = f.n, q = f.q(), p = f.p(), s = f.s;
  const Structure st = Build(v, r, n);
  const std::vector<int> sizes{r, n, q, r, p};
  const auto ch = [&](const MatrixXd& M) {
    return Stack(sizes, s, {st.Gam * M, st.Pi * M, Zr(q, s), st.Gam * M, Zr(p, s)});
  };
  const auto out = [&](const MatrixXd& M) {
    return Stack(sizes, s, {Zr(r, s), Zr(n, s), Zr(q, s), Zr(r, s), M});
  };
  const int N = r + n + q + r + p;
  MatrixXd M1(N, 4 * s);
  M1 << ch(f.MAd), ch(f.MBd), out(f.MCd), out(f.MD);
  MatrixXd N1 = Zr(4 * s, N);
  N1.block(0, r, s, n) = f.NAd;
  N1.block(s, r + n, s, q) = f.NBd;
  N1.block(2 * s, r, s, n) = f.NCd;
  N1.block(3 * s, r + n, s, q) = f.ND;
  return Absorbed(DenseBrl(f, v, gamma2, 0.0), M1, N1, v.eps);
}

// Synthesis matrix on the dual loop, rows (r, n, p, r, q).
MatrixXd DenseLambda(const SvdEquivalentForm& f, const Vars& v, double gamma2, double alpha) {
  const int r = f.r, n = f.n, q = f.q(), p = f.p();
  const Structure s = Build(v, r, n);
  const MatrixXd &A = f.Ad, &Bw = f.Bwd, &Bu = f.Bud, &C = f.Cd, &D = f.Dwd;
  const MatrixXd L11 = -0.5 * v.Q - 0.5 * v.Q.transpose();
  const MatrixXd L21 = A * s.Gam.transpose() + Bu * v.Z.transpose() * s.Omega.transpose();
  const MatrixXd L31 = C * s.Gam.transpose();
  const MatrixXd L41 = v.L - v.Q - 0.5 * v.Q.transpose();
  const MatrixXd L22 = s.Pi * A.transpose() + A * s.Pi.transpose() + s.Phi * v.Z * Bu.transpose() +
                       Bu * v.Z.transpose() * s.Phi.transpose() - s.Theta;
  const MatrixXd L32 = C * s.Pi.transpose();
  const MatrixXd L52 = Bw.transpose() + alpha * Bw.transpose() * s.Pi * A.transpose() +
                       alpha * Bw.transpose() * s.Phi.transpose() * v.Z * Bu.transpose();
  const MatrixXd L53 = D.transpose() + alpha * Bw.transpose() * s.Pi * C.transpose();
  return Dense({r, n, p, r, q},
               {{L11, L21.transpose(), L31.transpose(), L41.transpose(), Zr(r, q)},
                {L21, L22, L32.transpose(), L21, L52.transpose()},
                {L31, L32, -gamma2 * Id(p), L31, L53.transpose()},
                {L41, L21.transpose(), L31.transpose(), -v.Q - v.Q.transpose(), Zr(r, q)},
                {Zr(q, r), L52, L53, Zr(q, r), -Id(q)}});
}

MatrixXd DenseSynthesis(const SvdEquivalentForm& f, const Vars& v, double gamma2) {
  const int r = f.r, n = f.n, q = f.q(), p = f.p(), s = f.s;
  const Structure st = Build(v, r, n);
  const std::vector<int> sizes{r, n, p, r, q};
  const int N = r + n + p + r + q;
  const auto col = [&](const MatrixXd& NdT) {
    return Stack(sizes, s, {st.Gam * NdT, st.Pi * NdT, Zr(p, s), st.Gam * NdT, Zr(q, s)});
  };
  const auto out = [&](const MatrixXd& M) {
    return Stack(sizes, s, {Zr(r, s), Zr(n, s), Zr(p, s), Zr(r, s), M});
  };
  MatrixXd N2(N, 4 * s);
  N2 << col(f.NAd.transpose()), col(f.NCd.transpose()), out(f.NBd.transpose()),
      out(f.ND.transpose());
  MatrixXd M2 = Zr(4 * s, N);
  M2.block(0, r, s, n) = f.MAd.transpose();
  M2.block(s, r + n, s, p) = f.MCd.transpose();
  M2.block(2 * s, r, s, n) = f.MBd.transpose();
  M2.block(3 * s, r + n, s, p) = f.MD.transpose();
  return Absorbed(DenseLambda(f, v, gamma2, 0.0), N2, M2, v.eps);
}

MatrixXd DenseSynthesisAlpha(const SvdEquivalentForm& f, const Vars& v, double gamma2,
                             double alpha) {
  const int r = f.r, n = f.n, q = f.q(), p = f.p(), s = f.s;
  const Structure st = Build(v, r, n);
  const std::vector<int> sizes{r, n, p, r, q};
  const int N = r + n + p + r + q;
  const MatrixXd NAT = f.NAd.transpose();
  MatrixXd N2 = Zr(N, 4 * s);
  N2.leftCols(s) = Stack(sizes, s, {st.Gam * NAT, st.Pi * NAT, Zr(p, s), st.Gam * NAT, Zr(q, s)});
  N2.middleCols(2 * s, s) = Stack(sizes, s, {Zr(r, s), Zr(n, s), Zr(p, s), Zr(r, s),
                                             alpha * f.Bwd.transpose() * st.Pi * NAT});
  MatrixXd M2 = Zr(4 * s, N);
  M2.block(0, r, s, n) = f.MAd.transpose();
  M2.block(2 * s, r, s, n) = f.MAd.transpose();
  return Absorbed(DenseLambda(f, v, gamma2, alpha), N2, M2, v.eps);
}

// Random uncertain plant with factors in all four matrices.
UncertainPlant RandomUncertain(Rng& rng, int n, int r, int s) {
  const MatrixXd E = testing::RankDeficient(rng, n, r);
  const int q = 2, p = 2, m = 1;
  auto plant = DescriptorPlant::Make(E, Gaussian(rng, n, n), Gaussian(rng, n, q),
                                     Gaussian(rng, n, m), Gaussian(rng, p, n),
                                     Gaussian(rng, p, q));
  return UncertainPlant::Make(plant, s, Gaussian(rng, n, s), Gaussian(rng, s, n),
                              Gaussian(rng, n, s), Gaussian(rng, s, q), Gaussian(rng, p, s),
                              Gaussian(rng, s, n), Gaussian(rng, p, s), Gaussian(rng, s, q));
}

UncertainPlant OnlyA(Rng& rng, int n, int r, int s) {
  UncertainPlant u = RandomUncertain(rng, n, r, s);
  for (MatrixXd* M : {&u.MB, &u.NB, &u.MC, &u.NC, &u.MD, &u.ND}) M->setZero();
  return u;
}

bool Feasible(const AffineMatrixInequality& ami) {
  return SolveFeasibility(ami.ToSdp()).status == SdpStatus::kFeasible;
}

TEST(VariableLayout, CountsAndIndices) {
  const int r = 2, n = 5, m = 3;
  const auto lay = VariableLayout::Certificate(r, n, m, true, true);
  EXPECT_EQ(lay.size(), r * (r + 1) / 2 + r * r + r * (n - r) + (n - r) * (n - r) + n * m + 2);
  EXPECT_EQ(lay.Index("L", 0, 1), lay.Index("L", 1, 0));
  EXPECT_NE(lay.Index("Q", 0, 1), lay.Index("Q", 1, 0));
  EXPECT_FALSE(VariableLayout::Certificate(r, n, 0, false, false).Has("Z"));
  EXPECT_FALSE(VariableLayout::Certificate(r, n, 0, false, false).Has("t"));

  Rng rng(1);
  const Vars v = RandomVars(rng, r, n, m);
  const VectorXd x = Pack(lay, v);
  EXPECT_EQ(lay.Extract("L", x), v.L);
  EXPECT_EQ(lay.Extract("Z", x), v.Z);
  EXPECT_EQ(lay.Matrix("R").Evaluate(x), v.R);
}

TEST(NominalBrl, MatchesDenseConstruction) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = testing::Uniform(rng, 2, 5), r = testing::Uniform(rng, 1, n);
    const UncertainPlant u = RandomUncertain(rng, n, r, 1);
    const auto f = ComputeSvdEquivalentForm(u.plant);
    const double alpha = trial % 2 ? 0.0 : 3.5;
    const auto fixed = AssembleNominalBrl(f, 1.7, alpha);
    const auto free = AssembleNominalBrl(f, std::nullopt, alpha);
    const Vars v = RandomVars(rng, r, n, 0);
    const MatrixXd ref = DenseBrl(f, v, 1.7 * 1.7, alpha);
    EXPECT_LT((fixed.Evaluate(Pack(fixed.layout, v))[0] - ref).cwiseAbs().maxCoeff(), 1e-12);
    const MatrixXd ref_t = DenseBrl(f, v, v.t, alpha);
    const auto blocks = free.Evaluate(Pack(free.layout, v));
    EXPECT_LT((blocks[0] - ref_t).cwiseAbs().maxCoeff(), 1e-12);
    ASSERT_EQ(blocks.size(), 2u);
    EXPECT_EQ(blocks[1], -v.L);
  }
}

TEST(RobustBrl, MatchesPetersenOfNominal) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = testing::Uniform(rng, 2, 4), r = testing::Uniform(rng, 1, n - 1);
    const int s = testing::Uniform(rng, 1, 2);
    const UncertainPlant u = RandomUncertain(rng, n, r, s);
    const auto f = ComputeSvdEquivalentForm(u);
    const auto ami = AssembleRobustBrl(f, 2.0);
    const Vars v = RandomVars(rng, r, n, 0);
    const MatrixXd ref = DenseRobustBrl(f, v, 4.0);
    const MatrixXd got = ami.Evaluate(Pack(ami.layout, v))[0];
    ASSERT_EQ(got.rows(), ref.rows());
    EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-14 * (1.0 + ref.cwiseAbs().maxCoeff()) * 10);
  }
}

TEST(RobustBrl, ExampleDimension) {
  const auto ami = AssembleRobustBrl(ComputeSvdEquivalentForm(demo::Plant()), 2.0);
  EXPECT_EQ(ami.Block("robust_brl").data.constant.rows(), 14);
  const std::vector<int> part{2, 3, 2, 2, 1, 4};
  EXPECT_EQ(ami.Block("robust_brl").partition, part);
}

TEST(Synthesis, MatchesDenseConstruction) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = testing::Uniform(rng, 2, 4), r = testing::Uniform(rng, 1, n - 1);
    const int s = testing::Uniform(rng, 1, 2);
    const UncertainPlant u = RandomUncertain(rng, n, r, s);
    const auto f = ComputeSvdEquivalentForm(u);
    const auto ami = AssembleSynthesis(f, std::nullopt);
    const Vars v = RandomVars(rng, r, n, u.plant.m());
    const MatrixXd ref = DenseSynthesis(f, v, v.t);
    const MatrixXd got = ami.Evaluate(Pack(ami.layout, v))[0];
    ASSERT_EQ(got.rows(), ref.rows());
    EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + ref.cwiseAbs().maxCoeff()));
  }
}

TEST(SynthesisAlpha, MatchesDenseConstruction) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = testing::Uniform(rng, 2, 4), r = testing::Uniform(rng, 1, n - 1);
    const UncertainPlant u = OnlyA(rng, n, r, 1);
    const auto f = ComputeSvdEquivalentForm(u);
    const double alpha = 0.5 + trial;
    const auto ami = AssembleSynthesisAlpha(f, 1.3, alpha);
    const Vars v = RandomVars(rng, r, n, u.plant.m());
    const MatrixXd ref = DenseSynthesisAlpha(f, v, 1.69, alpha);
    const MatrixXd got = ami.Evaluate(Pack(ami.layout, v))[0];
    EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + ref.cwiseAbs().maxCoeff()));
  }
}

TEST(SynthesisAlpha, ZeroAlphaIsBitIdentical) {
  const auto f = ComputeSvdEquivalentForm(demo::Plant());
  for (std::optional<double> g : {std::optional<double>(1.95), std::optional<double>()}) {
    const auto a = AssembleSynthesis(f, g);
    const auto b = AssembleSynthesisAlpha(f, g, 0.0);
    ASSERT_EQ(a.blocks.size(), b.blocks.size());
    for (std::size_t k = 0; k < a.blocks.size(); ++k) {
      EXPECT_EQ(a.blocks[k].data.constant, b.blocks[k].data.constant);
      ASSERT_EQ(a.blocks[k].data.coefficients.size(), b.blocks[k].data.coefficients.size());
      for (std::size_t i = 0; i < a.blocks[k].data.coefficients.size(); ++i) {
        EXPECT_EQ(a.blocks[k].data.coefficients[i], b.blocks[k].data.coefficients[i]);
      }
    }
  }
}

TEST(SynthesisAlpha, RejectsUncertaintyOutsideA) {
  Rng rng(6);
  const auto f = ComputeSvdEquivalentForm(RandomUncertain(rng, 3, 2, 1));
  EXPECT_THROW(AssembleSynthesisAlpha(f, 2.0, 1.0), InvalidAlphaPath);
  EXPECT_THROW(AssembleSynthesisAlpha(ComputeSvdEquivalentForm(demo::Plant()), 2.0, -1.0),
               InvalidAlphaPath);
}

TEST(Assembly, DeterministicAndSymmetric) {
  const auto f = ComputeSvdEquivalentForm(demo::Plant());
  const auto a = AssembleSynthesisAlpha(f, std::nullopt, 1000.0);
  const auto b = AssembleSynthesisAlpha(f, std::nullopt, 1000.0);
  EXPECT_EQ(a.ToJson().dump(), b.ToJson().dump());
  for (const auto& blk : a.blocks) {
    EXPECT_EQ(blk.data.constant, blk.data.constant.transpose());
    for (const auto& F : blk.data.coefficients) EXPECT_EQ(F, F.transpose());
  }
  EXPECT_EQ(a.ToJson()["dimension"], a.Dimension());
}

TEST(NominalBrl, ScalarExample) {
  const MatrixXd one = MatrixXd::Ones(1, 1);
  const auto p = DescriptorPlant::Make(one, 0.5 * one, one, MatrixXd(), one, MatrixXd::Zero(1, 1));
  const auto f = ComputeSvdEquivalentForm(p);
  EXPECT_TRUE(Feasible(AssembleNominalBrl(f, 2.5, 0.0)));
  EXPECT_FALSE(Feasible(AssembleNominalBrl(f, 1.9, 0.0)));
}

TEST(NominalBrl, ExampleOpenLoopInfeasible) {
  const auto f = ComputeSvdEquivalentForm(demo::Plant().plant);
  for (double g : {1.0, 10.0, 1000.0}) EXPECT_FALSE(Feasible(AssembleNominalBrl(f, g, 0.0)));
}

TEST(NominalBrl, ExampleClosedLoopWithPublishedGain) {
  const auto cl = ClosedLoop(demo::Plant().plant, demo::ReferenceGainK1());
  EXPECT_TRUE(Feasible(AssembleNominalBrl(ComputeSvdEquivalentForm(cl), 2.01, 1000.0)));
}

TEST(RobustBrl, ZeroFactorsAgreeWithNominal) {
  Rng rng(7);
  int checked = 0;
  while (checked < 10) {
    const int n = testing::Uniform(rng, 2, 4), r = testing::Uniform(rng, 1, n - 1);
    const auto pen = testing::AdmissiblePencil(rng, n, r);
    const auto plant = DescriptorPlant::Make(pen.E, pen.A, Gaussian(rng, n, 1),
                                             MatrixXd(), Gaussian(rng, 1, n),
                                             0.1 * Gaussian(rng, 1, 1));
    const double norm = testing::BruteForceNorm(plant.E, plant.A, plant.Bw, plant.C, plant.Dw);
    const auto zero = UncertainPlant::Make(plant, 1, MatrixXd::Zero(n, 1), MatrixXd::Zero(1, n));
    for (double g : {0.9 * norm, 1.1 * norm, 3.0 * norm}) {
      const bool nominal = Feasible(AssembleNominalBrl(ComputeSvdEquivalentForm(plant), g, 0.0));
      const bool robust = Feasible(AssembleRobustBrl(ComputeSvdEquivalentForm(zero), g));
      EXPECT_EQ(nominal, robust) << "gamma " << g;
      if (g < norm) EXPECT_FALSE(robust);
    }
    ++checked;
  }
}

TEST(RobustBrl, CertificateImpliesSampledBound) {
  const auto u = demo::Plant();
  const SynthesisResult syn = SynthesizeOptimal(u);
  ASSERT_TRUE(syn.has_gain());
  const auto cl = ClosedLoop(u, syn.F);
  const double gamma = 2.1;
  ASSERT_TRUE(Feasible(AssembleRobustBrl(ComputeSvdEquivalentForm(cl), gamma)));
  for (const MatrixXd& d : DefaultSamples(1, 41)) {
    const auto p = cl.Realize(d);
    EXPECT_LT(testing::BruteForceNorm(p.E, p.A, p.Bw, p.C, p.Dw, 4000), gamma);
  }
  // The published gain has a sampled norm above 2.1 on this plant.
  const auto k1 = ClosedLoop(u, demo::ReferenceGainK1());
  EXPECT_FALSE(Feasible(AssembleRobustBrl(ComputeSvdEquivalentForm(k1), gamma)));
}

TEST(Synthesis, ExampleFeasibilityBoundaries) {
  const auto f = ComputeSvdEquivalentForm(demo::Plant());
  EXPECT_FALSE(Feasible(AssembleSynthesis(f, 1.5)));
  EXPECT_FALSE(Feasible(AssembleSynthesis(f, 1.95)));
  EXPECT_TRUE(Feasible(AssembleSynthesis(f, 2.05)));
}

TEST(Synthesis, RemovingUncertaintyLoosensExample) {
  const auto nominal = ComputeSvdEquivalentForm(demo::Plant().plant);
  EXPECT_TRUE(Feasible(AssembleSynthesis(nominal, 1.95)));
  EXPECT_FALSE(Feasible(AssembleSynthesis(nominal, 1.85)));
}

TEST(SynthesisAlpha, ExampleAtLargeAlpha) {
  const auto f = ComputeSvdEquivalentForm(demo::Plant());
  EXPECT_TRUE(Feasible(AssembleSynthesisAlpha(f, 1.20, 1000.0)));
  EXPECT_FALSE(Feasible(AssembleSynthesisAlpha(f, 1.10, 1000.0)));
}

TEST(Petersen, ExamplesAndErrors) {
  const MatrixXd G = -2.0 * MatrixXd::Identity(2, 2);
  const MatrixXd M = MatrixXd::Identity(2, 1);
  const MatrixXd N = M.transpose();
  const auto ami = PetersenAbsorb(G, M, N);
  EXPECT_EQ(ami.layout.size(), 1);
  // eps + 1/eps <= 2 only at eps = 1: feasible, but not strictly.
  EXPECT_NEAR(MaxEig(ami.Evaluate(VectorXd::Ones(1))[0]), 0.0, 1e-14);
  const SdpSolution sol = SolveFeasibility(ami.ToSdp());
  EXPECT_EQ(sol.status, SdpStatus::kMarginal);
  EXPECT_NEAR(sol.x(0), 1.0, 1e-3);
  EXPECT_TRUE(Feasible(PetersenAbsorb(-3.0 * MatrixXd::Identity(2, 2), M, N)));
  EXPECT_FALSE(Feasible(PetersenAbsorb(MatrixXd::Identity(2, 2), M, N)));
  EXPECT_THROW(PetersenAbsorb(G, MatrixXd::Zero(2, 1), N), DimensionError);
  EXPECT_THROW(PetersenAbsorb(G, M, MatrixXd::Zero(1, 2)), DimensionError);
}

TEST(Petersen, FeasibilityImpliesSampledInequality) {
  Rng rng(8);
  int feasible = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = testing::Uniform(rng, 1, 4), s = testing::Uniform(rng, 1, 2);
    const MatrixXd G = -testing::RandomSymmetric(rng, n) - 3.0 * MatrixXd::Identity(n, n);
    const MatrixXd M = Gaussian(rng, n, s), N = Gaussian(rng, s, n);
    const auto ami = PetersenAbsorb(G, M, N);
    const SdpProblem prob = ami.ToSdp();
    const SdpSolution sol = SolveFeasibility(prob);
    if (sol.status != SdpStatus::kFeasible) continue;
    ++feasible;
    for (int k = 0; k < 100; ++k) {
      const MatrixXd D = testing::UnitDelta(rng, s) * (k % 5) / 4.0;
      const MatrixXd H = G + M * D * N + (M * D * N).transpose();
      EXPECT_LE(MaxEig(H), -0.5 * prob.margin);
    }
  }
  EXPECT_GT(feasible, 5);
}

TEST(NonconservativeRanks, Examples) {
  EXPECT_FALSE(CheckNonconservativeRanks(demo::Plant()));
  UncertainPlant u = demo::Plant();
  u.plant.C.setZero();
  u.plant.Bw.setZero();
  EXPECT_TRUE(CheckNonconservativeRanks(u));
  Rng rng(9);
  const auto full = DescriptorPlant::Make(MatrixXd::Identity(3, 3), Gaussian(rng, 3, 3),
                                          Gaussian(rng, 3, 2), Gaussian(rng, 3, 1),
                                          Gaussian(rng, 1, 3), Gaussian(rng, 1, 2));
  EXPECT_TRUE(CheckNonconservativeRanks(UncertainPlant::Certain(full)));
}

}  // namespace
}  // namespace dhinf
