#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bbdyn/error.hpp"
#include "bbdyn/harness.hpp"

namespace {

using bbdyn::Error;
using bbdyn::ErrorCode;
using namespace bbdyn::harness;

struct Flags {
  std::string config;
  std::string spectrum;
  std::string problem_file;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::optional<int> iters;
  std::optional<double> tol;
  std::string solver;
  std::string out_dir;
  std::string format;
  std::string basis;
  std::string init;
  std::optional<double> kappa;
  std::optional<std::size_t> dim;
  std::string precision;
  std::string kappas;
  bool worst_case = false;
  bool entries = false;
  std::optional<double> noise_floor;
  std::string lambda_lo;
  std::string lambda_hi;
  std::string mode;
};

void add_shared(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file (flags override it)");
  sub->add_option("--spectrum", f.spectrum, "comma-separated eigenvalues");
  sub->add_option("--problem-file", f.problem_file, "JSON problem file");
  sub->add_option("--seed", f.seed, "single seed");
  sub->add_option("--seeds", f.seeds, "seed list or range, e.g. 1,4,9 or 0-99");
  sub->add_option("--iters", f.iters, "maximum iterations")->check(CLI::NonNegativeNumber);
  sub->add_option("--tol", f.tol, "relative gradient tolerance");
  sub->add_option("--solver", f.solver, "bb, sd or both");
  sub->add_option("--out-dir", f.out_dir, "output directory (default $BBDYN_OUT_DIR or bbdyn_out)");
  sub->add_option("--format", f.format, "csv, json or both");
  sub->add_option("--basis", f.basis, "random or identity");
  sub->add_option("--init", f.init, "uniform01 or worst-case");
  sub->add_option("--kappa", f.kappa, "random spectrum with this condition number");
  sub->add_option("--dim", f.dim, "dimension of the random spectrum");
  sub->add_option("--precision", f.precision, "binary64 or extended");
}

ExperimentConfig build_config(const Flags& f, ExperimentConfig base) {
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw Error(ErrorCode::Config, "cannot open config '" + f.config + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Config, std::string("config: ") + e.what());
    }
    base = ExperimentConfig::from_json(j, base);
    if (!j.contains("out_dir")) base.out_dir.clear();
  } else {
    base.out_dir.clear();
  }

  nlohmann::json overrides = nlohmann::json::object();
  if (!f.spectrum.empty()) overrides["spectrum"] = f.spectrum;
  if (!f.problem_file.empty()) overrides["problem_file"] = f.problem_file;
  if (f.seed) overrides["seed"] = *f.seed;
  if (!f.seeds.empty()) overrides["seeds"] = f.seeds;
  if (f.iters) overrides["iters"] = *f.iters;
  if (f.tol) overrides["tol"] = *f.tol;
  if (!f.solver.empty()) overrides["solver"] = f.solver;
  if (!f.out_dir.empty()) overrides["out_dir"] = f.out_dir;
  if (!f.format.empty()) overrides["format"] = f.format;
  if (!f.basis.empty()) overrides["basis"] = f.basis;
  if (!f.init.empty()) overrides["init"] = f.init;
  if (f.kappa) overrides["kappa"] = *f.kappa;
  if (f.dim) overrides["dim"] = *f.dim;
  if (!f.precision.empty()) overrides["precision"] = f.precision;
  if (!f.kappas.empty()) overrides["kappas"] = f.kappas;
  if (f.worst_case) overrides["sweep_worst_case"] = true;
  if (f.entries) overrides["entries"] = true;
  if (f.noise_floor) overrides["noise_floor"] = *f.noise_floor;
  if (!f.lambda_lo.empty()) overrides["lambda_lo"] = f.lambda_lo;
  if (!f.lambda_hi.empty()) overrides["lambda_hi"] = f.lambda_hi;
  if (!f.mode.empty()) overrides["orbit_mode"] = f.mode;
  ExperimentConfig cfg = ExperimentConfig::from_json(overrides, base);

  if (cfg.out_dir.empty()) {
    const char* env = std::getenv("BBDYN_OUT_DIR");
    cfg.out_dir = (env && *env) ? env : "bbdyn_out";
  }
  if (f.seed && !f.seeds.empty()) throw Error(ErrorCode::Config, "give --seed or --seeds, not both");
  return cfg;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::Io:
      return kExitUsage;
    default:
      return kExitNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Barzilai-Borwein coefficient dynamics: solvers, bound verification and experiments"};
  app.require_subcommand(1);
  Flags f;

  using Command = std::function<RunManifest(const ExperimentConfig&)>;
  std::map<CLI::App*, std::pair<Command, ExperimentConfig>> commands;

  auto* solve = app.add_subcommand("solve", "run BB and/or SD and write trajectories");
  add_shared(solve, f);
  commands[solve] = {cmd_solve, ExperimentConfig{}};

  auto* verify = app.add_subcommand("verify", "run BB and check every proven inequality");
  add_shared(verify, f);
  verify->add_flag("--entries", f.entries, "also write the per-entry CSV");
  verify->add_option("--noise-floor", f.noise_floor, "tolerate rounding of this size relative to the trace scale")
      ->check(CLI::NonNegativeNumber);
  commands[verify] = {cmd_verify, ExperimentConfig{}};

  auto* figure1 = app.add_subcommand("figure1", "4-d coefficient trajectory preset");
  add_shared(figure1, f);
  commands[figure1] = {cmd_figure1, ExperimentConfig{}};

  auto* sweep = app.add_subcommand("sweep", "condition-number by seed grid of empirical rates");
  add_shared(sweep, f);
  sweep->add_option("--kappas", f.kappas, "comma-separated condition numbers");
  sweep->add_flag("--worst-case", f.worst_case, "add worst-case rows per cell");
  ExperimentConfig sweep_defaults;
  sweep_defaults.kappas = {10.0, 100.0, 1000.0};
  commands[sweep] = {cmd_sweep, sweep_defaults};

  auto* orbit = app.add_subcommand("orbit", "two-eigenvalue worst-case orbit");
  add_shared(orbit, f);
  orbit->add_option("--lambda-lo", f.lambda_lo, "smaller eigenvalue (decimal or p/q)");
  orbit->add_option("--lambda-hi", f.lambda_hi, "larger eigenvalue (decimal or p/q)");
  orbit->add_option("--mode", f.mode, "exact or float");
  ExperimentConfig orbit_defaults;
  orbit_defaults.iters = 64;
  orbit_defaults.init = "worst-case";
  commands[orbit] = {cmd_orbit, orbit_defaults};

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (auto& [sub, entry] : commands) {
      if (!sub->parsed()) continue;
      const ExperimentConfig cfg = build_config(f, entry.second);
      const RunManifest m = entry.first(cfg);
      return m.exit_code;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
