#include "dhinf/verify.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/SVD>

#include "dhinf/json_io.h"
#include "dhinf/synth.h"

namespace dhinf {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double SigmaMax(const MatrixXcd& P) {
  if (P.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXcd> svd(P);
  return svd.singularValues()(0);
}

// sigma_max at e^{iw}; nudges w off a pencil eigenvalue if needed.
double Gain(const Realization& sys, double w, int* perturbed) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    try {
      return SigmaMax(TransferValue(sys, std::polar(1.0, w)));
    } catch (const SingularPencilError&) {
      if (perturbed) ++*perturbed;
      w += 1e-9 * std::pow(10.0, attempt);
    }
  }
  return std::numeric_limits<double>::infinity();
}

double Wrap(double w) {
  w = std::fmod(w, kTwoPi);
  return w < 0.0 ? w + kTwoPi : w;
}

}  // namespace

HinfNormResult HinfNorm(const Realization& sys, const HinfNormOptions& options) {
  if (options.grid_points < 3) throw DimensionError("grid_points must be at least 3");
  HinfNormResult out;
  out.admissible = CheckAdmissibility(sys.E, sys.A).admissible;
  if (!out.admissible) {
    out.norm = std::numeric_limits<double>::infinity();
    return out;
  }

  const int N = options.grid_points;
  const double h = kTwoPi / N;
  std::vector<double> g(N);
  for (int k = 0; k < N; ++k) g[k] = Gain(sys, k * h, &out.perturbed_points);

  // Refine the three largest local maxima of the grid.
  std::vector<int> peaks;
  for (int k = 0; k < N; ++k) {
    if (g[k] >= g[(k + N - 1) % N] && g[k] >= g[(k + 1) % N]) peaks.push_back(k);
  }
  std::sort(peaks.begin(), peaks.end(), [&](int a, int b) { return g[a] > g[b]; });
  if (peaks.size() > 3) peaks.resize(3);

  const int best = static_cast<int>(std::max_element(g.begin(), g.end()) - g.begin());
  out.norm = g[best];
  out.omega = best * h;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int k : peaks) {
    double a = k * h - h, b = k * h + h;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = Gain(sys, Wrap(c), nullptr), fd = Gain(sys, Wrap(d), nullptr);
    while (b - a > options.refine_tol) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = Gain(sys, Wrap(c), nullptr);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = Gain(sys, Wrap(d), nullptr);
      }
    }
    const double w = Wrap(0.5 * (a + b));
    const double val = std::max({fc, fd, Gain(sys, w, nullptr)});
    if (val > out.norm) {
      out.norm = val;
      out.omega = w;
    }
  }
  return out;
}

std::vector<MatrixXd> SampleUncertainty(int s, int count, SampleMode mode,
                                        std::uint64_t seed) {
  if (s < 1) throw DimensionError("uncertainty dimension must be at least 1");
  std::vector<MatrixXd> out;
  switch (mode) {
    case SampleMode::kGrid: {
      if (s != 1) throw DimensionError("grid sampling needs s = 1");
      if (count < 1) throw DimensionError("sample count must be positive");
      if (count == 1) return {MatrixXd::Zero(1, 1)};
      for (int k = 0; k < count; ++k) {
        // Symmetric formula keeps the endpoints and 0 exact.
        const double v = static_cast<double>(2 * k - (count - 1)) / (count - 1);
        out.push_back(MatrixXd::Constant(1, 1, v));
      }
      return out;
    }
    case SampleMode::kRandom: {
      if (count < 1) throw DimensionError("sample count must be positive");
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> gauss;
      while (static_cast<int>(out.size()) < count) {
        MatrixXd D(s, s);
        for (int i = 0; i < s; ++i) {
          for (int j = 0; j < s; ++j) D(i, j) = gauss(rng);
        }
        Eigen::JacobiSVD<MatrixXd> svd(D);
        const double top = svd.singularValues()(0);
        if (top == 0.0) continue;
        out.push_back(D / top);
      }
      return out;
    }
    case SampleMode::kVertices: {
      if (s > 20) throw DimensionError("too many sign patterns");
      for (long mask = 0; mask < (1L << s); ++mask) {
        MatrixXd D = MatrixXd::Zero(s, s);
        for (int i = 0; i < s; ++i) D(i, i) = (mask >> i) & 1 ? -1.0 : 1.0;
        out.push_back(std::move(D));
      }
      return out;
    }
  }
  return out;
}

std::vector<MatrixXd> DefaultSamples(int s, int grid_count, int random_count,
                                     std::uint64_t seed) {
  if (s == 0) return {MatrixXd(0, 0)};
  if (s == 1) return SampleUncertainty(1, grid_count, SampleMode::kGrid, seed);
  return SampleUncertainty(s, random_count, SampleMode::kRandom, seed);
}

RobustnessReport RobustVerify(const UncertainPlant& plant, const std::optional<MatrixXd>& F,
                              const std::vector<MatrixXd>& samples,
                              std::optional<double> gamma_target,
                              const HinfNormOptions& options) {
  if (samples.empty()) throw DimensionError("at least one uncertainty sample is required");
  const UncertainPlant loop = F ? ClosedLoop(plant, *F) : plant;

  RobustnessReport rep;
  rep.gamma_target = gamma_target;
  rep.all_admissible = true;
  rep.rho_min = std::numeric_limits<double>::infinity();
  rep.rho_max = -std::numeric_limits<double>::infinity();
  rep.worst_norm = -std::numeric_limits<double>::infinity();
  for (const MatrixXd& delta : samples) {
    const DescriptorPlant realized = loop.Realize(delta);
    const AdmissibilityReport adm = CheckAdmissibility(realized.E, realized.A);
    DeltaSample ds;
    ds.delta = delta;
    ds.regular = adm.regular;
    ds.causal = adm.causal;
    ds.stable = adm.stable;
    ds.admissible = adm.admissible;
    ds.spectral_radius = adm.spectral_radius.value_or(std::numeric_limits<double>::quiet_NaN());
    if (adm.spectral_radius) {
      rep.rho_min = std::min(rep.rho_min, *adm.spectral_radius);
      rep.rho_max = std::max(rep.rho_max, *adm.spectral_radius);
    }
    if (adm.admissible) {
      const HinfNormResult h = HinfNorm(DisturbanceRealization(realized), options);
      ds.norm = h.norm;
      ds.omega = h.omega;
    } else {
      ds.norm = std::numeric_limits<double>::infinity();
      rep.all_admissible = false;
    }
    if (ds.norm > rep.worst_norm) {
      rep.worst_norm = ds.norm;
      rep.worst_omega = ds.omega;
      rep.worst_index = static_cast<int>(rep.samples.size());
    }
    rep.samples.push_back(std::move(ds));
  }
  rep.pass = rep.all_admissible && (!gamma_target || rep.worst_norm < *gamma_target);
  return rep;
}

namespace {

nlohmann::json Number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json Flag(const std::optional<bool>& b) {
  return b ? nlohmann::json(*b) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json ReportToJson(const RobustnessReport& rep) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : rep.samples) {
    samples.push_back({{"delta", MatrixToJson(s.delta)},
                       {"regular", s.regular},
                       {"causal", Flag(s.causal)},
                       {"stable", Flag(s.stable)},
                       {"admissible", s.admissible},
                       {"spectral_radius", Number(s.spectral_radius)},
                       {"norm", Number(s.norm)},
                       {"omega", Number(s.omega)}});
  }
  return {{"samples", std::move(samples)},
          {"all_admissible", rep.all_admissible},
          {"rho_min", Number(rep.rho_min)},
          {"rho_max", Number(rep.rho_max)},
          {"sampled_worst_case_norm", Number(rep.worst_norm)},
          {"worst_omega", Number(rep.worst_omega)},
          {"worst_index", rep.worst_index},
          {"gamma_target", rep.gamma_target ? nlohmann::json(*rep.gamma_target)
                                            : nlohmann::json(nullptr)},
          {"pass", rep.pass}};
}

std::string ReportToText(const RobustnessReport& rep) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  os << std::setw(12) << "delta" << std::setw(12) << "admissible" << std::setw(12) << "rho"
     << std::setw(12) << "norm" << std::setw(12) << "omega" << "\n";
  for (const auto& s : rep.samples) {
    std::ostringstream d;
    d << std::setprecision(4) << std::fixed;
    if (s.delta.size() == 1) {
      d << s.delta(0, 0);
    } else {
      d << "[" << s.delta.rows() << "x" << s.delta.cols() << "]";
    }
    os << std::setw(12) << d.str() << std::setw(12) << (s.admissible ? "yes" : "no")
       << std::setw(12) << s.spectral_radius << std::setw(12) << s.norm << std::setw(12)
       << s.omega << "\n";
  }
  os << "samples             " << rep.samples.size() << "\n"
     << "all admissible      " << (rep.all_admissible ? "yes" : "no") << "\n"
     << "rho range           [" << rep.rho_min << ", " << rep.rho_max << "]\n"
     << "sampled worst case  " << rep.worst_norm << " at omega " << rep.worst_omega << "\n";
  if (rep.gamma_target) os << "gamma target        " << *rep.gamma_target << "\n";
  os << "result              " << (rep.pass ? "pass" : "fail") << "\n";
  return os.str();
}

AlphaSweepCurve AlphaSweep(const UncertainPlant& plant, std::vector<double> alphas,
                           const SolverConfig& config) {
  if (!plant.UncertaintyOnlyInA()) {
    throw InvalidAlphaPath("alpha sweep needs uncertainty confined to A");
  }
  for (double a : alphas) {
    if (!(a >= 0.0)) throw InvalidAlphaPath("alpha must be nonnegative");
  }
  std::stable_sort(alphas.begin(), alphas.end());
  AlphaSweepCurve curve;
  for (double a : alphas) {
    const SynthesisResult res = SynthesizeOptimal(plant, a, config);
    AlphaSweepEntry e;
    e.alpha = a;
    e.status = std::string(ToString(res.status));
    if (res.has_gain()) e.gamma_min = res.gamma;
    curve.entries.push_back(std::move(e));
  }
  return curve;
}

nlohmann::json CurveToJson(const AlphaSweepCurve& curve) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : curve.entries) {
    rows.push_back({{"alpha", e.alpha},
                    {"gamma_min", e.gamma_min ? nlohmann::json(*e.gamma_min)
                                              : nlohmann::json(nullptr)},
                    {"status", e.status}});
  }
  return {{"curve", std::move(rows)}};
}

std::string CurveToCsv(const AlphaSweepCurve& curve) {
  std::ostringstream os;
  os << "alpha,gamma_min,status\n" << std::setprecision(10);
  for (const auto& e : curve.entries) {
    os << e.alpha << ",";
    if (e.gamma_min) os << *e.gamma_min;
    os << "," << e.status << "\n";
  }
  return os.str();
}

}  // namespace dhinf
