#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bbdyn/bounds.hpp"
#include "bbdyn/precision.hpp"
#include "bbdyn/problem.hpp"
#include "bbdyn/solvers.hpp"
#include "json.hpp"

namespace bbdyn::harness {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerificationFailed = 1,
  kExitUsage = 2,
  kExitNumeric = 3,
};

/// Everything that determines a run. A run is a pure function of
/// (config, seed): reruns produce byte-identical CSV payloads.
struct ExperimentConfig {
  // Problem source, first match wins: problem_file, spectrum, kappa (random
  // spectrum of size `dim`).
  std::optional<std::filesystem::path> problem_file;
  Vector spectrum;
  std::optional<double> kappa;
  std::size_t dim = 6;
  /// "random" (seeded orthogonal basis) or "identity".
  std::string basis = "random";
  /// "uniform01" (x_0 componentwise uniform on [0, 1)) or "worst-case".
  std::string init = "uniform01";

  /// "bb", "sd" or "both".
  std::string solver = "bb";
  int iters = 10000;
  double tol = 1e-12;
  Precision precision = Precision::Binary64;
  std::vector<std::uint64_t> seeds{0};

  std::filesystem::path out_dir = "bbdyn_out";
  bool write_csv = true;
  bool write_json = false;

  /// verify: also write the per-entry CSV.
  bool entries = false;
  /// verify: CheckOptions::noise_floor. Unset means kRoundingFloorUnits
  /// units of roundoff of the working precision; 0 makes the checks strict.
  std::optional<double> noise_floor;

  /// sweep: κ grid and whether to add worst-case rows.
  std::vector<double> kappas;
  bool sweep_worst_case = false;

  /// orbit: exact rational strings, e.g. "1" and "3" or "1/1000".
  std::string lambda_lo = "1";
  std::string lambda_hi = "3";
  /// "exact" or "float".
  std::string orbit_mode = "exact";

  nlohmann::json to_json() const;
  /// Overlays keys present in `j` onto `base`. Throws ErrorCode::Config.
  static ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base);
  static ExperimentConfig from_json(const nlohmann::json& j);
};

inline constexpr double kRoundingFloorUnits = 8.0;

/// The noise floor cmd_verify applies for this config.
double effective_noise_floor(const ExperimentConfig& cfg);

/// Parses "3", "1,4,9" or "0-99" (inclusive range).
std::vector<std::uint64_t> parse_seeds(const std::string& text);
/// Parses a comma-separated list of doubles.
Vector parse_list(const std::string& text);

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::vector<std::filesystem::path> files;
  nlohmann::json summary;
  double wall_seconds = 0.0;
  int exit_code = kExitOk;

  nlohmann::json to_json() const;
};

/// Problem instance for one seed.
SpectralProblem problem_for_seed(const ExperimentConfig& cfg, std::uint64_t seed);
/// Starting point for one seed.
Vector initial_point(const ExperimentConfig& cfg, const SpectralProblem& p, std::uint64_t seed);

RunManifest cmd_solve(const ExperimentConfig& cfg);
RunManifest cmd_verify(const ExperimentConfig& cfg);
RunManifest cmd_figure1(const ExperimentConfig& cfg);
RunManifest cmd_sweep(const ExperimentConfig& cfg);
RunManifest cmd_orbit(const ExperimentConfig& cfg);

/// The 4-d spectrum of the figure1 preset.
inline const Vector kFigure1Spectrum{0.001, 0.01, 0.1, 1.0};

/// A coefficient that towers over the others: |d_k^j| at least
/// kPeakDominance times every other |d_k^l|, and larger than |d_{k-1}^j|.
inline constexpr double kPeakDominance = 10.0;

struct PeakEvent {
  int k = 0;
  std::size_t index = 0;  // one-based
  double peak = 0.0;
  double pre_peak = 0.0;
  double dominance = 0.0;
  /// min(|d_{k+1}^j|, |d_{k+2}^j|) over the records that exist.
  double next_two_min = 0.0;
  bool dropped = false;
};

std::vector<PeakEvent> find_peaks(const std::vector<Vector>& coefficients);
std::string peaks_csv(const std::vector<PeakEvent>& peaks);

/// Log-scale polyline chart of |d_k^j| against k.
std::string coefficient_svg(const std::vector<Vector>& coefficients);

/// Writes the manifest (out_dir/manifest.json) and returns its path.
std::filesystem::path write_manifest(RunManifest& manifest, const std::filesystem::path& out_dir);

}  // namespace bbdyn::harness
