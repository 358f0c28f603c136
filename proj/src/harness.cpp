#include "bbdyn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <iostream>
#include <limits>
#include <thread>

#include "bbdyn/coeff_dynamics.hpp"
#include "bbdyn/error.hpp"
#include "bbdyn/io.hpp"
#include "bbdyn/rng.hpp"
#include "bbdyn/worst_case.hpp"

namespace bbdyn::harness {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Iterations used for worst-case rows in sweeps; well inside the measured
/// symmetry-break horizon for randomly rotated bases.
constexpr int kWorstCaseWindow = 40;

std::vector<Method> methods_for(const std::string& solver) {
  if (solver == "bb") return {Method::BB};
  if (solver == "sd") return {Method::SD};
  if (solver == "both") return {Method::BB, Method::SD};
  throw Error(ErrorCode::Config, "solver must be bb, sd or both (got '" + solver + "')");
}

SolverConfig solver_config(const ExperimentConfig& cfg) {
  SolverConfig sc;
  sc.max_iters = cfg.iters;
  sc.grad_tol = cfg.tol;
  sc.record_coefficients = true;
  sc.validate();
  return sc;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

/// Rate over the strictly positive prefix of the norms, NaN when too short.
double rate_or_nan(const Vector& norms) {
  Vector positive;
  for (double v : norms) {
    if (!(v > 0.0)) break;
    positive.push_back(v);
  }
  if (positive.size() < 10) return kNaN;
  return empirical_rate(positive);
}

void write_text(RunManifest& m, const fs::path& path, const std::string& contents) {
  io::atomic_write(path, contents);
  m.files.push_back(path);
}

RunManifest start(const std::string& command, const ExperimentConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.config = cfg.to_json();
  return m;
}

using Clock = std::chrono::steady_clock;

RunManifest finish(RunManifest m, const ExperimentConfig& cfg, Clock::time_point t0) {
  m.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  write_manifest(m, cfg.out_dir);
  return m;
}

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

}  // namespace

json ExperimentConfig::to_json() const {
  json j;
  if (problem_file) j["problem_file"] = problem_file->string();
  if (!spectrum.empty()) j["spectrum"] = spectrum;
  if (kappa) j["kappa"] = *kappa;
  j["dim"] = dim;
  j["basis"] = basis;
  j["init"] = init;
  j["solver"] = solver;
  j["iters"] = iters;
  j["tol"] = tol;
  j["precision"] = to_string(precision);
  j["seeds"] = seeds;
  j["out_dir"] = out_dir.string();
  json formats = json::array();
  if (write_csv) formats.push_back("csv");
  if (write_json) formats.push_back("json");
  j["format"] = formats;
  j["entries"] = entries;
  if (noise_floor) j["noise_floor"] = *noise_floor;
  if (!kappas.empty()) j["kappas"] = kappas;
  j["sweep_worst_case"] = sweep_worst_case;
  j["lambda_lo"] = lambda_lo;
  j["lambda_hi"] = lambda_hi;
  j["orbit_mode"] = orbit_mode;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, ExperimentConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "problem_file") c.problem_file = value.get<std::string>();
      else if (key == "spectrum") c.spectrum = value.is_string() ? parse_list(value.get<std::string>()) : value.get<Vector>();
      else if (key == "kappa") c.kappa = value.get<double>();
      else if (key == "dim") c.dim = value.get<std::size_t>();
      else if (key == "basis") c.basis = value.get<std::string>();
      else if (key == "init") c.init = value.get<std::string>();
      else if (key == "solver") c.solver = value.get<std::string>();
      else if (key == "iters") c.iters = value.get<int>();
      else if (key == "tol") c.tol = value.get<double>();
      else if (key == "precision") c.precision = parse_precision(value.get<std::string>());
      else if (key == "seed") c.seeds = {value.get<std::uint64_t>()};
      else if (key == "seeds") {
        c.seeds = value.is_string() ? parse_seeds(value.get<std::string>())
                                    : value.get<std::vector<std::uint64_t>>();
      } else if (key == "out_dir") c.out_dir = value.get<std::string>();
      else if (key == "format") {
        const auto formats = value.is_string() ? std::vector<std::string>{value.get<std::string>()}
                                               : value.get<std::vector<std::string>>();
        c.write_csv = c.write_json = false;
        for (const auto& f : formats) {
          if (f == "csv") c.write_csv = true;
          else if (f == "json") c.write_json = true;
          else if (f == "both") c.write_csv = c.write_json = true;
          else throw Error(ErrorCode::Config, "unknown format '" + f + "'");
        }
      } else if (key == "entries") c.entries = value.get<bool>();
      else if (key == "noise_floor") c.noise_floor = value.get<double>();
      else if (key == "kappas") c.kappas = value.is_string() ? parse_list(value.get<std::string>()) : value.get<Vector>();
      else if (key == "sweep_worst_case") c.sweep_worst_case = value.get<bool>();
      else if (key == "lambda_lo") c.lambda_lo = value.is_string() ? value.get<std::string>() : value.dump();
      else if (key == "lambda_hi") c.lambda_hi = value.is_string() ? value.get<std::string>() : value.dump();
      else if (key == "orbit_mode") c.orbit_mode = value.get<std::string>();
      else throw Error(ErrorCode::Config, "unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) { return from_json(j, ExperimentConfig{}); }

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  const auto parse_one = [&](const std::string& s) -> std::uint64_t {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Config, "bad seed '" + s + "'");
    }
    if (used != s.size() || s.front() == '-') throw Error(ErrorCode::Config, "bad seed '" + s + "'");
    return v;
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (item.empty()) throw Error(ErrorCode::Config, "empty seed in '" + text + "'");
    const std::size_t dash = item.find('-', 1);
    if (dash != std::string::npos) {
      const std::uint64_t lo = parse_one(item.substr(0, dash));
      const std::uint64_t hi = parse_one(item.substr(dash + 1));
      if (hi < lo) throw Error(ErrorCode::Config, "descending seed range '" + item + "'");
      for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      out.push_back(parse_one(item));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

Vector parse_list(const std::string& text) {
  Vector out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Config, "bad number '" + item + "'");
    }
    if (used != item.size()) throw Error(ErrorCode::Config, "bad number '" + item + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

json RunManifest::to_json() const {
  json paths = json::array();
  for (const auto& f : files) paths.push_back(f.string());
  return {{"command", command}, {"config", config},      {"files", paths},
          {"summary", summary}, {"exit_code", exit_code}, {"wall_seconds", wall_seconds}};
}

fs::path write_manifest(RunManifest& manifest, const fs::path& out_dir) {
  const fs::path path = out_dir / "manifest.json";
  manifest.files.push_back(path);
  io::atomic_write(path, manifest.to_json().dump(2) + "\n");
  return path;
}

double effective_noise_floor(const ExperimentConfig& cfg) {
  if (cfg.noise_floor) return *cfg.noise_floor;
  const double eps = cfg.precision == Precision::Extended
                         ? std::numeric_limits<Extended>::epsilon().convert_to<double>()
                         : std::numeric_limits<double>::epsilon();
  return kRoundingFloorUnits * eps;
}

SpectralProblem problem_for_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.basis != "random" && cfg.basis != "identity") {
    throw Error(ErrorCode::Config, "basis must be random or identity");
  }
  if (cfg.problem_file) return load_problem(*cfg.problem_file);
  Vector lambda;
  if (!cfg.spectrum.empty()) {
    lambda = cfg.spectrum;
  } else if (cfg.kappa) {
    lambda = random_spectrum(cfg.dim, *cfg.kappa, seed);
  } else {
    throw Error(ErrorCode::Config, "no problem source: give --problem-file, --spectrum or --kappa");
  }
  if (cfg.basis == "identity") return diagonal_problem(lambda);
  return synthesize(lambda, seed);
}

Vector initial_point(const ExperimentConfig& cfg, const SpectralProblem& p, std::uint64_t seed) {
  if (cfg.init == "worst-case") return worst_case_x0(p);
  if (cfg.init == "uniform01") {
    Rng rng(seed, streams::kInitialPoint);
    Vector x0(p.dim());
    for (double& x : x0) x = rng.uniform01();
    return x0;
  }
  throw Error(ErrorCode::Config, "init must be uniform01 or worst-case (got '" + cfg.init + "')");
}

RunManifest cmd_solve(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  RunManifest m = start("solve", cfg);
  const auto methods = methods_for(cfg.solver);
  const SolverConfig sc = solver_config(cfg);

  json runs = json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const SpectralProblem p = problem_for_seed(cfg, seed);
    const Vector x0 = initial_point(cfg, p, seed);
    for (Method method : methods) {
      const SolverTrajectory t = run_solver(method, p, x0, sc, cfg.precision);
      const std::string stem = "solve_" + std::string(to_string(method)) + "_" + seed_tag(seed);
      if (cfg.write_csv) write_text(m, cfg.out_dir / (stem + ".csv"), trajectory_csv(t));
      if (cfg.write_json) write_text(m, cfg.out_dir / (stem + ".json"), trajectory_json(t).dump(1) + "\n");

      const double ratio = t.records.back().grad_norm / t.records.front().grad_norm;
      std::cout << to_string(method) << " seed=" << seed << " iterations=" << t.iterations()
                << " termination=" << to_string(t.reason) << " final_ratio=" << io::format_double(ratio)
                << "\n";
      runs.push_back({{"seed", seed},
                      {"solver", to_string(method)},
                      {"iterations", t.iterations()},
                      {"termination", to_string(t.reason)},
                      {"final_grad_ratio", number_or_null(ratio)},
                      {"empirical_rate", number_or_null(rate_or_nan(t.grad_norms()))}});
      if (t.reason == TerminationReason::Diverged) m.exit_code = kExitNumeric;
    }
  }
  m.summary = {{"runs", runs}};
  return finish(std::move(m), cfg, t0);
}

RunManifest cmd_verify(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  RunManifest m = start("verify", cfg);
  const SolverConfig sc = solver_config(cfg);
  const bool worst_case = cfg.init == "worst-case";

  VerificationReport total;
  json per_seed = json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const SpectralProblem p = problem_for_seed(cfg, seed);
    const Vector x0 = initial_point(cfg, p, seed);
    const SolverTrajectory t = run_solver(Method::BB, p, x0, sc, cfg.precision);
    CheckOptions opts;
    opts.noise_floor = effective_noise_floor(cfg);
    VerificationReport report = verify_trace(CoefficientTrace::from_solver(p, t), opts);

    json row{{"seed", seed},
             {"n", p.dim()},
             {"kappa", p.condition_number()},
             {"iterations", t.iterations()},
             {"termination", to_string(t.reason)}};
    if (worst_case && !p.single_eigenvalue()) {
      const EmbeddedOrbitCheck orbit = embed_orbit_check(p, std::min(cfg.iters, 200));
      report.merge(orbit.report);
      const Vector norms = orbit.trajectory.grad_norms();
      const Vector window(norms.begin(), norms.begin() + std::min<std::ptrdiff_t>(orbit.horizon, std::ssize(norms)));
      const double kappa = p.condition_number();
      row["orbit_horizon"] = orbit.horizon;
      row["empirical_rate"] = number_or_null(rate_or_nan(window));
      row["closed_form_rate"] = (kappa - 1.0) / (kappa + 1.0);
    } else {
      row["empirical_rate"] = number_or_null(rate_or_nan(t.grad_norms()));
    }
    row["theta"] = p.dim() >= 1 ? 1.0 - 1.0 / p.condition_number() : kNaN;
    row["failures"] = report.failures();
    per_seed.push_back(std::move(row));
    total.merge(report);
  }

  json report_json = total.summary_json();
  report_json["noise_floor"] = effective_noise_floor(cfg);
  report_json["seeds"] = per_seed;
  write_text(m, cfg.out_dir / "verify_report.json", report_json.dump(2) + "\n");
  if (cfg.entries) write_text(m, cfg.out_dir / "verify_entries.csv", total.entries_csv());

  for (const auto& f : total.families) {
    std::cout << f.family << ": checked=" << f.checked << " passed=" << f.passed
              << " failed=" << f.failed() << " skipped=" << f.skipped << "\n";
  }
  std::cout << (total.all_passed() ? "PASS" : "FAIL") << " (" << total.failures() << " failures)\n";
  m.summary = total.summary_json();
  m.exit_code = total.all_passed() ? kExitOk : kExitVerificationFailed;
  return finish(std::move(m), cfg, t0);
}

std::vector<PeakEvent> find_peaks(const std::vector<Vector>& coefficients) {
  std::vector<PeakEvent> out;
  for (std::size_t k = 1; k < coefficients.size(); ++k) {
    const Vector& d = coefficients[k];
    for (std::size_t j = 0; j < d.size(); ++j) {
      const double value = std::abs(d[j]);
      double others = 0.0;
      for (std::size_t l = 0; l < d.size(); ++l)
        if (l != j) others = std::max(others, std::abs(d[l]));
      const double pre = std::abs(coefficients[k - 1][j]);
      if (value <= pre || value < kPeakDominance * others || others == 0.0) continue;

      PeakEvent ev;
      ev.k = static_cast<int>(k);
      ev.index = j + 1;
      ev.peak = value;
      ev.pre_peak = pre;
      ev.dominance = value / others;
      ev.next_two_min = std::numeric_limits<double>::infinity();
      for (std::size_t step = 1; step <= 2 && k + step < coefficients.size(); ++step) {
        ev.next_two_min = std::min(ev.next_two_min, std::abs(coefficients[k + step][j]));
      }
      ev.dropped = ev.next_two_min < pre;
      out.push_back(ev);
    }
  }
  return out;
}

std::string peaks_csv(const std::vector<PeakEvent>& peaks) {
  std::string out = "k,index,peak,pre_peak,dominance,next_two_min,dropped\n";
  for (const auto& p : peaks) {
    out += std::to_string(p.k) + ',' + std::to_string(p.index) + ',' + io::format_double(p.peak) + ',' +
           io::format_double(p.pre_peak) + ',' + io::format_double(p.dominance) + ',' +
           (std::isfinite(p.next_two_min) ? io::format_double(p.next_two_min) : std::string()) + ',' +
           (p.dropped ? "1" : "0") + '\n';
  }
  return out;
}

std::string coefficient_svg(const std::vector<Vector>& coefficients) {
  constexpr double kWidth = 800, kHeight = 500, kLeft = 70, kRight = 20, kTop = 20, kBottom = 50;
  // Purple, orange, red, blue for the smallest to largest eigenvalue, then extras.
  static const char* kColors[] = {"#7b3294", "#ff7f0e", "#d62728", "#1f77b4",
                                  "#2ca02c", "#8c564b", "#e377c2", "#17becf"};
  const std::size_t n = coefficients.empty() ? 0 : coefficients.front().size();
  const std::size_t steps = coefficients.empty() ? 1 : std::max<std::size_t>(coefficients.size() - 1, 1);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& d : coefficients)
    for (double v : d)
      if (v != 0.0) {
        lo = std::min(lo, std::log10(std::abs(v)));
        hi = std::max(hi, std::log10(std::abs(v)));
      }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  lo = std::floor(lo);
  hi = std::ceil(hi);
  if (hi <= lo) hi = lo + 1.0;

  const auto px = [&](double k) { return kLeft + (kWidth - kLeft - kRight) * k / static_cast<double>(steps); };
  const auto py = [&](double y) { return kTop + (kHeight - kTop - kBottom) * (hi - y) / (hi - lo); };

  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "font-family=\"sans-serif\" font-size=\"12\">\n",
                kWidth, kHeight);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n",
                kLeft, kTop, kWidth - kLeft - kRight, kHeight - kTop - kBottom);
  out += buf;

  const int decade_step = std::max(1, static_cast<int>((hi - lo) / 10.0));
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += decade_step) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">1e%d</text>\n",
                  kLeft, py(e), kWidth - kRight, py(e), kLeft - 6, py(e) + 4, e);
    out += buf;
  }
  const std::size_t k_step = std::max<std::size_t>(1, steps / 10);
  for (std::size_t k = 0; k <= steps; k += k_step) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%zu</text>\n",
                  px(static_cast<double>(k)), kHeight - kBottom + 18, k);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">k</text>\n",
                (kLeft + kWidth - kRight) / 2, kHeight - 10);
  out += buf;

  for (std::size_t j = 0; j < n; ++j) {
    const char* color = kColors[j % std::size(kColors)];
    std::string points;
    const auto flush = [&] {
      if (points.empty()) return;
      out += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"";
      out += color;
      out += "\" points=\"" + points + "\"/>\n";
      points.clear();
    };
    for (std::size_t k = 0; k < coefficients.size(); ++k) {
      const double v = std::abs(coefficients[k][j]);
      if (v == 0.0) {
        flush();
        continue;
      }
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(static_cast<double>(k)), py(std::log10(v)));
      points += buf;
    }
    flush();
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">|d_k^%zu|</text>\n", kWidth - kRight - 60,
                  kTop + 16 + 16 * static_cast<double>(j), color, j + 1);
    out += buf;
  }
  out += "</svg>\n";
  return out;
}

RunManifest cmd_figure1(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  RunManifest m = start("figure1", cfg);
  const std::uint64_t seed = cfg.seeds.empty() ? 0 : cfg.seeds.front();
  const SpectralProblem p = diagonal_problem(kFigure1Spectrum);
  Rng rng(seed, streams::kInitialPoint);
  Vector x0(p.dim());
  for (double& x : x0) x = rng.uniform01();

  const SolverTrajectory t = run_solver(Method::BB, p, x0, solver_config(cfg), cfg.precision);
  const std::vector<Vector> d = t.coefficients();
  const std::size_t n = p.dim();

  std::string csv = "k,grad_norm";
  for (std::size_t i = 1; i <= n; ++i) csv += ",abs_d_" + std::to_string(i);
  for (std::size_t i = 1; i <= n; ++i) csv += ",mode_" + std::to_string(i);
  csv += '\n';
  for (const auto& r : t.records) {
    csv += std::to_string(r.k) + ',' + io::format_double(r.grad_norm);
    for (double v : r.d) csv += ',' + io::format_double(std::abs(v));
    for (std::size_t i = 0; i < n; ++i) {
      csv += ',';
      csv += mode_letter(classify_mode(p.eigenvalues(), r.d, i));
    }
    csv += '\n';
  }
  write_text(m, cfg.out_dir / "figure1.csv", csv);
  write_text(m, cfg.out_dir / "figure1.svg", coefficient_svg(d));
  const auto peaks = find_peaks(d);
  write_text(m, cfg.out_dir / "figure1_peaks.csv", peaks_csv(peaks));

  // The smallest-eigenvalue coefficient: non-increasing, and contracting by θ.
  const double theta = 1.0 - 1.0 / p.condition_number();
  std::size_t non_monotone = 0;
  std::size_t contraction_violations = 0;
  for (std::size_t k = 1; k + 1 < d.size(); ++k) {
    const double cur = std::abs(d[k][0]);
    const double next = std::abs(d[k + 1][0]);
    if (next > cur) ++non_monotone;
    if (next > theta * cur * (1.0 + 1e-9) + 1e-300) ++contraction_violations;
  }
  const double final_ratio = t.records.back().grad_norm / t.records.front().grad_norm;
  std::size_t dropped = 0;
  for (const auto& pk : peaks) dropped += pk.dropped ? 1 : 0;

  std::cout << "figure1 seed=" << seed << " iterations=" << t.iterations()
            << " final_ratio=" << io::format_double(final_ratio) << " peaks=" << peaks.size()
            << " dropped_within_two=" << dropped << "\n";
  m.summary = {{"seed", seed},
               {"iterations", t.iterations()},
               {"termination", to_string(t.reason)},
               {"final_grad_ratio", final_ratio},
               {"theta", theta},
               {"d1_non_increasing", non_monotone == 0},
               {"d1_contraction_violations", contraction_violations},
               {"peaks", peaks.size()},
               {"peaks_dropped_within_two", dropped}};
  return finish(std::move(m), cfg, t0);
}

namespace {

struct SweepRow {
  double kappa = 0.0;
  std::uint64_t seed = 0;
  std::string solver;
  double rate = kNaN;
  double theta = 0.0;
  double sd_bound = 0.0;
  int iters_to_tol = -1;
};

std::vector<SweepRow> sweep_cell(const ExperimentConfig& cfg, double kappa, std::uint64_t seed) {
  ExperimentConfig cell = cfg;
  cell.kappa = kappa;
  cell.spectrum.clear();
  cell.problem_file.reset();
  const SpectralProblem p = problem_for_seed(cell, seed);
  const Vector x0 = initial_point(cell, p, seed);
  const double theta = 1.0 - 1.0 / kappa;
  const double sd_bound = (kappa - 1.0) / (kappa + 1.0);

  std::vector<SweepRow> rows;
  for (Method method : methods_for(cfg.solver)) {
    const SolverTrajectory t = run_solver(method, p, x0, solver_config(cfg), cfg.precision);
    SweepRow row{kappa, seed, std::string(to_string(method)), rate_or_nan(t.grad_norms()), theta, sd_bound, -1};
    if (t.reason == TerminationReason::Converged || t.reason == TerminationReason::ExactZeroGradient) {
      row.iters_to_tol = t.iterations();
    }
    rows.push_back(row);
  }
  if (cfg.sweep_worst_case && p.dim() >= 2 && !p.single_eigenvalue()) {
    const EmbeddedOrbitCheck orbit = embed_orbit_check(p, std::min(cfg.iters, kWorstCaseWindow));
    const Vector norms = orbit.trajectory.grad_norms();
    const Vector window(norms.begin(), norms.begin() + std::min<std::ptrdiff_t>(orbit.horizon, std::ssize(norms)));
    rows.push_back({kappa, seed, "bb-worst-case", rate_or_nan(window), theta, sd_bound, -1});
  }
  return rows;
}

}  // namespace

RunManifest cmd_sweep(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  RunManifest m = start("sweep", cfg);
  if (cfg.kappas.empty() || cfg.seeds.empty()) throw Error(ErrorCode::Config, "sweep grid is empty");
  methods_for(cfg.solver);

  struct Cell {
    double kappa;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double kappa : cfg.kappas)
    for (std::uint64_t seed : cfg.seeds) cells.push_back({kappa, seed});

  // Cells are independent; results are gathered in grid order.
  std::vector<std::vector<SweepRow>> results(cells.size());
  const std::size_t workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  for (std::size_t begin = 0; begin < cells.size(); begin += workers) {
    std::vector<std::future<std::vector<SweepRow>>> batch;
    const std::size_t end = std::min(cells.size(), begin + workers);
    for (std::size_t c = begin; c < end; ++c) {
      batch.push_back(std::async(std::launch::async, sweep_cell, std::cref(cfg), cells[c].kappa, cells[c].seed));
    }
    for (std::size_t c = begin; c < end; ++c) results[c] = batch[c - begin].get();
  }

  std::string csv = "kappa,seed,solver,empirical_rate,theta,sd_rate_bound,iters_to_tol\n";
  json rows = json::array();
  std::size_t above_theta = 0;
  for (const auto& cell_rows : results) {
    for (const auto& r : cell_rows) {
      csv += io::format_double(r.kappa) + ',' + std::to_string(r.seed) + ',' + r.solver + ',' +
             (std::isfinite(r.rate) ? io::format_double(r.rate) : std::string()) + ',' +
             io::format_double(r.theta) + ',' + io::format_double(r.sd_bound) + ',' +
             std::to_string(r.iters_to_tol) + '\n';
      if (r.solver != "sd" && std::isfinite(r.rate) && r.rate > r.theta) ++above_theta;
    }
  }
  write_text(m, cfg.out_dir / "sweep.csv", csv);
  std::cout << "sweep cells=" << cells.size() << " bb_rates_above_theta=" << above_theta << "\n";
  m.summary = {{"cells", cells.size()}, {"bb_rates_above_theta", above_theta}};
  return finish(std::move(m), cfg, t0);
}

RunManifest cmd_orbit(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  RunManifest m = start("orbit", cfg);
  if (cfg.orbit_mode != "exact" && cfg.orbit_mode != "float") {
    throw Error(ErrorCode::Config, "orbit mode must be exact or float");
  }
  const mpq_class lo = parse_rational(cfg.lambda_lo);
  const mpq_class hi = parse_rational(cfg.lambda_hi);
  const TwoModeOrbit orbit = cfg.orbit_mode == "exact"
                                 ? run_orbit_exact(lo, hi, cfg.iters)
                                 : run_orbit(lo.get_d(), hi.get_d(), cfg.iters, OrbitMode::Float64);
  write_text(m, cfg.out_dir / "orbit.csv", orbit_csv(orbit));

  const mpq_class rate_exact = (hi - lo) / (hi + lo);
  json summary{{"mode", to_string(orbit.mode)},
               {"iterations", static_cast<int>(orbit.points.size()) - 1},
               {"closed_form_rate", rate_exact.get_d()},
               {"theta", 1.0 - mpq_class(lo / hi).get_d()}};
  if (orbit.mode == OrbitMode::ExactRational) {
    mpq_class power = 1;
    bool exact = true;
    for (std::size_t k = 0; k < orbit.a_exact.size(); ++k) {
      const mpq_class sign = (k % 2 == 0) ? 1 : -1;
      if (orbit.a_exact[k] != power || orbit.b_exact[k] != sign * power) exact = false;
      power *= rate_exact;
    }
    summary["matches_closed_form_exactly"] = exact;
  } else {
    summary["symmetry_break"] = orbit.symmetry_break ? json(*orbit.symmetry_break) : json(nullptr);
    summary["closed_form_departure"] =
        orbit.closed_form_departure ? json(*orbit.closed_form_departure) : json(nullptr);
  }
  const Vector norms = orbit.grad_norms();
  if (norms.size() >= 10) summary["empirical_rate"] = number_or_null(rate_or_nan(norms));

  if (cfg.problem_file || !cfg.spectrum.empty() || cfg.kappa) {
    const std::uint64_t seed = cfg.seeds.empty() ? 0 : cfg.seeds.front();
    const SpectralProblem p = problem_for_seed(cfg, seed);
    const EmbeddedOrbitCheck check = embed_orbit_check(p, cfg.iters);
    write_text(m, cfg.out_dir / "orbit_embedded.csv", trajectory_csv(check.trajectory));
    json embedded = check.report.summary_json();
    embedded["horizon"] = check.horizon;
    embedded["symmetry_broken"] = check.symmetry_broken;
    embedded["degenerate"] = check.degenerate;
    embedded["max_interior"] = check.max_interior;
    summary["embedded"] = embedded;
    if (!check.report.all_passed()) m.exit_code = kExitVerificationFailed;
  }

  std::cout << "orbit mode=" << to_string(orbit.mode) << " closed_form_rate=" << io::format_double(rate_exact.get_d())
            << "\n";
  m.summary = summary;
  return finish(std::move(m), cfg, t0);
}

}  // namespace bbdyn::harness
