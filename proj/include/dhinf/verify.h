#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dhinf/model.h"
#include "dhinf/sdp.h"

namespace dhinf {

struct HinfNormOptions {
  int grid_points = 4096;
  /// Golden-section stopping width in omega.
  double refine_tol = 1e-8;
};

struct HinfNormResult {
  /// +inf when the realization is not admissible.
  double norm = 0.0;
  double omega = 0.0;
  bool admissible = false;
  /// Grid points moved off a pencil eigenvalue before evaluation.
  int perturbed_points = 0;
};

/// max over [0, 2pi) of sigma_max(C (e^{iw} E - A)^-1 B + D).
HinfNormResult HinfNorm(const Realization& sys, const HinfNormOptions& options = {});

enum class SampleMode { kGrid, kRandom, kVertices };

/// grid: `count` evenly spaced scalars in [-1, 1] (s = 1 only); random: `count`
/// Gaussian matrices scaled to unit spectral norm; vertices: every diagonal
/// sign pattern (count ignored).
std::vector<MatrixXd> SampleUncertainty(int s, int count, SampleMode mode,
                                        std::uint64_t seed = 0);

/// 41-point grid for s = 1, otherwise `random_count` random samples.
std::vector<MatrixXd> DefaultSamples(int s, int grid_count = 41, int random_count = 200,
                                     std::uint64_t seed = 0);

struct DeltaSample {
  MatrixXd delta;
  bool regular = false;
  std::optional<bool> causal;
  std::optional<bool> stable;
  bool admissible = false;
  /// NaN when the pencil is irregular.
  double spectral_radius = 0.0;
  double norm = 0.0;
  double omega = 0.0;
};

struct RobustnessReport {
  std::vector<DeltaSample> samples;
  bool all_admissible = false;
  double rho_min = 0.0;
  double rho_max = 0.0;
  /// Sampled worst case; a lower bound on the true robust norm.
  double worst_norm = 0.0;
  double worst_omega = 0.0;
  int worst_index = -1;
  std::optional<double> gamma_target;
  bool pass = false;
};

/// Realizes A + Bu F (F optional) at every Delta and checks admissibility and
/// the sweep norm. pass = all admissible and worst norm < gamma_target.
RobustnessReport RobustVerify(const UncertainPlant& plant,
                              const std::optional<MatrixXd>& F,
                              const std::vector<MatrixXd>& samples,
                              std::optional<double> gamma_target,
                              const HinfNormOptions& options = {});

nlohmann::json ReportToJson(const RobustnessReport& report);
std::string ReportToText(const RobustnessReport& report);

struct AlphaSweepEntry {
  double alpha = 0.0;
  std::optional<double> gamma_min;
  std::string status;
};

struct AlphaSweepCurve {
  std::vector<AlphaSweepEntry> entries;
};

/// Minimized gamma for each alpha (sorted ascending). Throws InvalidAlphaPath
/// if the plant has uncertainty outside A or an alpha is negative.
AlphaSweepCurve AlphaSweep(const UncertainPlant& plant, std::vector<double> alphas,
                           const SolverConfig& config = {});

nlohmann::json CurveToJson(const AlphaSweepCurve& curve);
/// Header "alpha,gamma_min,status"; an empty gamma field for failed entries.
std::string CurveToCsv(const AlphaSweepCurve& curve);

}  // namespace dhinf
