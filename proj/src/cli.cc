#include "dhinf/cli.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dhinf/demo.h"
#include "dhinf/json_io.h"
#include "dhinf/lmi.h"
#include "dhinf/synth.h"
#include "dhinf/verify.h"

namespace dhinf::cli {
namespace {

using nlohmann::json;

// Raised for any input the user has to fix; maps to exit 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  CLI::Option* input = nullptr;
  CLI::Option* demo = nullptr;
  CLI::Option* gamma = nullptr;
  CLI::Option* alpha = nullptr;
  CLI::Option* minimize = nullptr;
  CLI::Option* gain = nullptr;
  CLI::Option* delta_grid = nullptr;
  CLI::Option* samples = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* output = nullptr;
  CLI::Option* format = nullptr;
  CLI::Option* margin = nullptr;
  CLI::Option* tol = nullptr;
  CLI::Option* max_iter = nullptr;
  CLI::Option* print_plant = nullptr;
  std::string config_path;
};

void AddCommon(CLI::App* sub, RunConfig& flags, Options& o, bool with_input) {
  if (with_input) {
    o.input = sub->add_option("--input,-i", flags.input, "plant JSON file");
    o.demo = sub->add_flag("--demo", flags.demo_plant, "use the built-in example plant");
  }
  sub->add_option("--config", o.config_path, "JSON config file");
  o.delta_grid = sub->add_option("--delta-grid", flags.delta_grid, "grid points in [-1, 1] (s = 1)")
                     ->check(CLI::PositiveNumber);
  o.samples = sub->add_option("--samples", flags.samples, "random uncertainty samples (s > 1)")
                  ->check(CLI::PositiveNumber);
  o.seed = sub->add_option("--seed", flags.seed, "sampling seed");
  o.output = sub->add_option("--output,-o", flags.output, "report file (default stdout)");
  o.format = sub->add_option("--format", flags.format, "json, text or csv")
                 ->check(CLI::IsMember({"json", "text", "csv"}));
  o.margin = sub->add_option("--solver.margin", flags.solver.margin, "relative LMI strictness")
                 ->check(CLI::PositiveNumber);
  o.tol = sub->add_option("--solver.tol", flags.solver.tol, "interior-point tolerance")
              ->check(CLI::PositiveNumber);
  o.max_iter = sub->add_option("--solver.max_iter", flags.solver.max_iter,
                               "interior-point iteration limit")
                   ->check(CLI::PositiveNumber);
}

void AddGamma(CLI::App* sub, RunConfig& flags, Options& o) {
  o.gamma = sub->add_option("--gamma", flags.gamma, "fixed performance level")
                ->check(CLI::PositiveNumber);
  o.minimize = sub->add_flag("--minimize", flags.minimize, "minimize gamma");
  o.gamma->excludes(o.minimize);
}

template <typename T>
void ReadKey(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("config key '") + key + "': " + e.what());
  }
}

RunConfig FromConfigFile(const std::string& path, RunConfig cfg) {
  json j;
  try {
    j = LoadJson(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  ReadKey(j, "input", cfg.input);
  if (j.contains("gamma")) {
    double g = 0.0;
    ReadKey(j, "gamma", g);
    cfg.gamma = g;
  }
  if (j.contains("alpha")) {
    if (j["alpha"].is_array()) {
      ReadKey(j, "alpha", cfg.alphas);
    } else {
      double a = 0.0;
      ReadKey(j, "alpha", a);
      cfg.alphas = {a};
    }
  }
  ReadKey(j, "minimize", cfg.minimize);
  ReadKey(j, "gain", cfg.gain_path);
  ReadKey(j, "delta_grid", cfg.delta_grid);
  ReadKey(j, "samples", cfg.samples);
  ReadKey(j, "seed", cfg.seed);
  ReadKey(j, "output", cfg.output);
  ReadKey(j, "format", cfg.format);
  if (j.contains("solver")) {
    const json& s = j["solver"];
    ReadKey(s, "margin", cfg.solver.margin);
    ReadKey(s, "tol", cfg.solver.tol);
    ReadKey(s, "max_iter", cfg.solver.max_iter);
  }
  return cfg;
}

// defaults < config file < explicit flags.
RunConfig Resolve(const RunConfig& flags, const Options& o) {
  RunConfig cfg;
  cfg.command = flags.command;
  // sweep-alpha has no default list.
  if (cfg.command == "sweep-alpha") cfg.alphas.clear();
  if (!o.config_path.empty()) cfg = FromConfigFile(o.config_path, cfg);
  const auto given = [](const CLI::Option* opt) { return opt && opt->count() > 0; };
  if (given(o.input)) cfg.input = flags.input;
  if (given(o.demo)) cfg.demo_plant = flags.demo_plant;
  if (given(o.gamma)) cfg.gamma = flags.gamma;
  if (given(o.alpha)) cfg.alphas = flags.alphas;
  if (given(o.minimize)) cfg.minimize = flags.minimize;
  if (given(o.gain)) cfg.gain_path = flags.gain_path;
  if (given(o.delta_grid)) cfg.delta_grid = flags.delta_grid;
  if (given(o.samples)) cfg.samples = flags.samples;
  if (given(o.seed)) cfg.seed = flags.seed;
  if (given(o.output)) cfg.output = flags.output;
  if (given(o.format)) cfg.format = flags.format;
  if (given(o.margin)) cfg.solver.margin = flags.solver.margin;
  if (given(o.tol)) cfg.solver.tol = flags.solver.tol;
  if (given(o.max_iter)) cfg.solver.max_iter = flags.solver.max_iter;
  if (given(o.print_plant)) cfg.print_plant = flags.print_plant;

  if (cfg.gamma && cfg.minimize) throw UsageError("--gamma and --minimize are mutually exclusive");
  if (cfg.gamma && !(*cfg.gamma > 0.0)) throw UsageError("gamma must be positive");
  if (cfg.format != "json" && cfg.format != "text" && cfg.format != "csv") {
    throw UsageError("unknown format " + cfg.format);
  }
  if (cfg.delta_grid < 1 || cfg.samples < 1) throw UsageError("sample counts must be positive");
  return cfg;
}

UncertainPlant LoadInputPlant(const RunConfig& cfg) {
  if (cfg.demo_plant || cfg.command == "demo") return demo::Plant();
  if (cfg.input.empty()) throw UsageError("--input (or --demo) is required");
  try {
    return LoadPlant(cfg.input);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  } catch (const DimensionError& e) {
    throw UsageError(e.what());
  }
}

MatrixXd LoadGain(const std::string& path) {
  json j;
  try {
    j = LoadJson(path);
    if (j.is_object()) {
      if (!j.contains("gain") || j["gain"].is_null()) {
        throw UsageError(path + ": no gain in document");
      }
      return MatrixFromJson(j["gain"], "gain");
    }
    return MatrixFromJson(j, "gain");
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
}

std::vector<MatrixXd> Samples(const UncertainPlant& plant, const RunConfig& cfg) {
  return DefaultSamples(plant.s, cfg.delta_grid, cfg.samples, cfg.seed);
}

json AdmissibilityToJson(const AdmissibilityReport& r) {
  const auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  return {{"regular", r.regular},
          {"causal", opt(r.causal)},
          {"stable", opt(r.stable)},
          {"spectral_radius", opt(r.spectral_radius)},
          {"admissible", r.admissible}};
}

void Emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.output);
  if (!f) throw UsageError("cannot write " + cfg.output);
  f << text;
}

std::string Dump(const json& j) { return j.dump(2) + "\n"; }

void RejectCsv(const RunConfig& cfg) {
  if (cfg.format == "csv") throw UsageError("csv output is only available for sweep-alpha");
}

double SingleAlpha(const RunConfig& cfg) {
  if (cfg.alphas.size() != 1) throw UsageError("exactly one --alpha value is expected");
  return cfg.alphas.front();
}

std::string SynthesisText(const SynthesisResult& res) {
  std::ostringstream os;
  os << std::setprecision(8);
  os << "status              " << ToString(res.status) << "\n"
     << "alpha               " << res.alpha << "\n";
  if (res.has_gain()) {
    os << "gamma               " << res.gamma << "\n"
       << "gain                [";
    for (Eigen::Index i = 0; i < res.F.rows(); ++i) {
      for (Eigen::Index j = 0; j < res.F.cols(); ++j) {
        os << (j ? " " : "") << res.F(i, j);
      }
      if (i + 1 < res.F.rows()) os << "; ";
    }
    os << "]\n"
       << "S regularized       " << (res.s_regularized ? "yes" : "no") << "\n"
       << "certificate margin  " << res.diagnostics.certificate_margin << "\n";
  }
  if (!res.message.empty()) os << "message             " << res.message << "\n";
  if (res.verification) os << "\n" << ReportToText(*res.verification);
  return os.str();
}

int SynthesisExit(const SynthesisResult& res) {
  if (res.status == SynthesisStatus::kInfeasible) return kUncertified;
  if (res.status == SynthesisStatus::kNumericalFailure) return kNumerical;
  if (!res.verification || !res.verification->pass) return kUncertified;
  return kOk;
}

SynthesisResult RunSynthesis(const UncertainPlant& plant, const RunConfig& cfg) {
  const double alpha = SingleAlpha(cfg);
  SynthesisResult res = cfg.gamma ? Synthesize(plant, *cfg.gamma, alpha, cfg.solver)
                                  : SynthesizeOptimal(plant, alpha, cfg.solver);
  if (res.has_gain()) {
    res.verification = RobustVerify(plant, res.F, Samples(plant, cfg), res.gamma + cfg.chain_tolerance);
  }
  return res;
}

int CmdSynthesize(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  RejectCsv(cfg);
  if (!cfg.gamma && !cfg.minimize) throw UsageError("one of --gamma or --minimize is required");
  const UncertainPlant plant = LoadInputPlant(cfg);
  if (plant.plant.Bu.isZero(0.0)) throw UsageError("synthesis needs a nonzero Bu");
  const SynthesisResult res = RunSynthesis(plant, cfg);
  for (const auto& w : res.diagnostics.warnings) err << "warning: " << w << "\n";
  Emit(cfg, cfg.format == "text" ? SynthesisText(res) : Dump(SynthesisResultToJson(res)), out);
  return SynthesisExit(res);
}

int CmdDemo(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  RejectCsv(cfg);
  const UncertainPlant plant = demo::Plant();
  if (cfg.print_plant) {
    Emit(cfg, Dump(PlantToJson(plant)), out);
    return kOk;
  }
  const AdmissibilityReport open = CheckAdmissibility(plant.plant.E, plant.plant.A);
  const SynthesisResult res = RunSynthesis(plant, cfg);
  for (const auto& w : res.diagnostics.warnings) err << "warning: " << w << "\n";
  if (cfg.format == "text") {
    std::ostringstream os;
    os << std::setprecision(8) << "open-loop spectral radius  "
       << open.spectral_radius.value_or(std::nan("")) << "\n\n"
       << SynthesisText(res);
    Emit(cfg, os.str(), out);
  } else {
    Emit(cfg,
         Dump({{"command", "demo"},
               {"plant", PlantToJson(plant)},
               {"open_loop", AdmissibilityToJson(open)},
               {"synthesis", SynthesisResultToJson(res)}}),
         out);
  }
  return SynthesisExit(res);
}

int CmdAnalyze(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  RejectCsv(cfg);
  if (!cfg.gamma && !cfg.minimize) throw UsageError("one of --gamma or --minimize is required");
  UncertainPlant plant = LoadInputPlant(cfg);
  if (!cfg.gain_path.empty()) {
    try {
      plant = ClosedLoop(plant, LoadGain(cfg.gain_path));
    } catch (const DimensionError& e) {
      throw UsageError(e.what());
    }
  } else if (!plant.plant.Bu.isZero(0.0)) {
    err << "warning: Bu is ignored by analysis\n";
  }
  const DescriptorPlant& p = plant.plant;
  const AdmissibilityReport adm = CheckAdmissibility(p.E, p.A);

  const SvdEquivalentForm form = ComputeSvdEquivalentForm(plant);
  const AffineMatrixInequality ami = AssembleRobustBrl(form, cfg.gamma);
  const SdpProblem problem = ami.ToSdp(cfg.solver);
  const SdpSolution sol = cfg.gamma
                              ? SolveFeasibility(problem, cfg.solver)
                              : MinimizeLinear(problem, ami.GammaSquaredObjective(), cfg.solver);
  const bool certified = sol.margin >= 0.5 * problem.margin;
  std::optional<double> gamma = cfg.gamma;
  if (!gamma && certified) gamma = std::sqrt(sol.x(ami.layout.Index("t", 0, 0)));

  const RobustnessReport sweep = RobustVerify(plant, std::nullopt, Samples(plant, cfg), gamma);

  int code = kOk;
  std::string verdict = "certified";
  if (!certified) {
    code = sol.status == SdpStatus::kNumericalFailure ? kNumerical : kUncertified;
    verdict = "uncertified";
  } else if (!sweep.pass) {
    // A certificate the sweep contradicts points at a numerical problem.
    code = kNumerical;
    verdict = "certificate contradicted by sweep";
  }

  if (cfg.format == "text") {
    std::ostringstream os;
    os << std::setprecision(8) << "admissible          " << (adm.admissible ? "yes" : "no")
       << "\nspectral radius     " << adm.spectral_radius.value_or(std::nan(""))
       << "\ncertificate         " << verdict << " (" << ToString(sol.status) << ")";
    if (gamma) os << "\ngamma               " << *gamma;
    os << "\nmargin              " << sol.margin << "\n\n" << ReportToText(sweep);
    Emit(cfg, os.str(), out);
  } else {
    Emit(cfg,
         Dump({{"command", "analyze"},
               {"admissibility", AdmissibilityToJson(adm)},
               {"certificate",
                {{"status", std::string(ToString(sol.status))},
                 {"certified", certified},
                 {"gamma", gamma ? json(*gamma) : json(nullptr)},
                 {"margin", sol.margin},
                 {"delta", problem.margin},
                 {"iterations", sol.iterations}}},
               {"verdict", verdict},
               {"sweep", ReportToJson(sweep)}}),
         out);
  }
  return code;
}

int CmdVerify(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  RejectCsv(cfg);
  const UncertainPlant plant = LoadInputPlant(cfg);
  std::optional<MatrixXd> F;
  if (!cfg.gain_path.empty()) F = LoadGain(cfg.gain_path);
  RobustnessReport rep;
  try {
    rep = RobustVerify(plant, F, Samples(plant, cfg), cfg.gamma);
  } catch (const DimensionError& e) {
    throw UsageError(e.what());
  }
  Emit(cfg, cfg.format == "text" ? ReportToText(rep) : Dump(ReportToJson(rep)), out);
  return rep.pass ? kOk : kUncertified;
}

int CmdSweepAlpha(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.alphas.empty()) throw UsageError("at least one --alpha value is required");
  std::vector<double> alphas = cfg.alphas;
  std::sort(alphas.begin(), alphas.end());
  const auto last = std::unique(alphas.begin(), alphas.end());
  if (last != alphas.end()) {
    err << "warning: dropped " << (alphas.end() - last) << " duplicate alpha value(s)\n";
    alphas.erase(last, alphas.end());
  }
  const UncertainPlant plant = LoadInputPlant(cfg);
  const AlphaSweepCurve curve = AlphaSweep(plant, alphas, cfg.solver);
  Emit(cfg, cfg.format == "json" ? Dump(CurveToJson(curve)) : CurveToCsv(curve), out);
  return kOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust H-infinity analysis and state-feedback synthesis for descriptor systems",
               "dhinf"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  RunConfig flags;
  auto* analyze = app.add_subcommand("analyze", "certify a gamma bound for a plant");
  auto* synthesize = app.add_subcommand("synthesize", "design a robust state-feedback gain");
  auto* verify = app.add_subcommand("verify", "closed-loop check over uncertainty samples");
  auto* sweep = app.add_subcommand("sweep-alpha", "minimized gamma for a list of alpha values");
  auto* demo = app.add_subcommand("demo", "synthesis on the built-in example plant");

  // Map nodes are stable, so options may bind into them by reference.
  std::map<CLI::App*, Options> per_command;
  for (CLI::App* sub : {analyze, synthesize, verify, sweep, demo}) {
    AddCommon(sub, flags, per_command[sub], sub != demo);
  }
  for (CLI::App* sub : {analyze, synthesize, demo}) AddGamma(sub, flags, per_command[sub]);
  per_command[verify].gamma = verify->add_option("--gamma", flags.gamma, "target norm bound")
                                  ->check(CLI::PositiveNumber);
  for (CLI::App* sub : {synthesize, demo}) {
    per_command[sub].alpha = sub->add_option("--alpha", flags.alphas, "alpha (default 0)")
                                 ->expected(1)
                                 ->check(CLI::NonNegativeNumber);
  }
  per_command[sweep].alpha = sweep->add_option("--alpha", flags.alphas, "alpha values")
                                 ->delimiter(',')
                                 ->check(CLI::NonNegativeNumber);
  for (CLI::App* sub : {analyze, verify}) {
    per_command[sub].gain = sub->add_option("--gain", flags.gain_path,
                                            "gain JSON (matrix or synthesis result)");
  }
  per_command[demo].print_plant =
      demo->add_flag("--print-plant", flags.print_plant, "write the example plant and exit");

  std::vector<std::string> argv_store{"dhinf"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  flags.command = chosen->get_name();
  const Options& opts = per_command[chosen];

  try {
    const RunConfig cfg = Resolve(flags, opts);
    if (flags.command == "analyze") return CmdAnalyze(cfg, out, err);
    if (flags.command == "synthesize") return CmdSynthesize(cfg, out, err);
    if (flags.command == "verify") return CmdVerify(cfg, out, err);
    if (flags.command == "sweep-alpha") return CmdSweepAlpha(cfg, out, err);
    return CmdDemo(cfg, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidAlphaPath& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidAlpha;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace dhinf::cli
