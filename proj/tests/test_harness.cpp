#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "bbdyn/error.hpp"
#include "bbdyn/harness.hpp"
#include "doctest.h"

using namespace bbdyn;
using namespace bbdyn::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bbdyn_harness_tests" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_manifest_complete(const RunManifest& m, const fs::path& dir) {
  std::set<fs::path> listed;
  for (const auto& f : m.files) {
    CHECK(fs::exists(f));
    listed.insert(fs::weakly_canonical(f));
  }
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) CHECK(listed.count(fs::weakly_canonical(e.path())) == 1);
  }
  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j["files"].size() == m.files.size());
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BBDYN_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("parse_seeds forms") {
  CHECK(parse_seeds("3") == std::vector<std::uint64_t>{3});
  CHECK(parse_seeds("1,4,9") == std::vector<std::uint64_t>{1, 4, 9});
  CHECK(parse_seeds("0-3") == std::vector<std::uint64_t>{0, 1, 2, 3});
  CHECK(parse_seeds("7,0-1") == std::vector<std::uint64_t>{7, 0, 1});
  CHECK_THROWS_AS(parse_seeds("5-2"), Error);
  CHECK_THROWS_AS(parse_seeds("x"), Error);
  CHECK_THROWS_AS(parse_seeds("1,,2"), Error);
  CHECK(parse_list("1,2.5,1e3") == Vector{1, 2.5, 1000});
}

TEST_CASE("config overlays and round-trips") {
  ExperimentConfig base;
  base.iters = 77;
  const auto j = nlohmann::json::parse(R"({"solver": "both", "seeds": "0-2", "format": ["csv", "json"]})");
  const ExperimentConfig c = ExperimentConfig::from_json(j, base);
  CHECK(c.iters == 77);
  CHECK(c.solver == "both");
  CHECK(c.seeds.size() == 3);
  CHECK(c.write_json);
  const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"nope": 1})")), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"iters": "many"})")), Error);
}

TEST_CASE("solve is deterministic and lists every file") {
  ExperimentConfig cfg;
  cfg.spectrum = {0.001, 0.01, 0.1, 1};
  cfg.basis = "random";
  cfg.solver = "both";
  cfg.seeds = {1, 2};
  cfg.iters = 200;
  cfg.write_json = true;
  cfg.out_dir = scratch("solve_a");
  const RunManifest a = cmd_solve(cfg);
  check_manifest_complete(a, cfg.out_dir);
  CHECK(a.files.size() == 9);

  ExperimentConfig again = cfg;
  again.out_dir = scratch("solve_b");
  cmd_solve(again);
  for (const char* name : {"solve_bb_seed1.csv", "solve_sd_seed2.csv", "solve_bb_seed2.json"}) {
    CHECK(slurp(cfg.out_dir / name) == slurp(again.out_dir / name));
  }
  CHECK(slurp(cfg.out_dir / "solve_bb_seed1.csv") != slurp(cfg.out_dir / "solve_bb_seed2.csv"));
}

TEST_CASE("solve on the identity converges in one step") {
  ExperimentConfig cfg;
  cfg.spectrum = {1, 1};
  cfg.solver = "sd";
  cfg.out_dir = scratch("solve_id");
  const RunManifest m = cmd_solve(cfg);
  CHECK(m.summary["runs"][0]["iterations"] == 1);
}

TEST_CASE("verify reports zero failures on random problems") {
  ExperimentConfig cfg;
  cfg.kappa = 100;
  cfg.dim = 6;
  cfg.seeds = parse_seeds("0-19");
  cfg.entries = true;
  cfg.out_dir = scratch("verify");
  const RunManifest m = cmd_verify(cfg);
  CHECK(m.exit_code == kExitOk);
  CHECK(m.summary["all_passed"] == true);
  check_manifest_complete(m, cfg.out_dir);

  cfg.noise_floor = 0.0;
  cfg.out_dir = scratch("verify_strict");
  CHECK(cmd_verify(cfg).exit_code == kExitOk);
}

TEST_CASE("verify on one dimension and on the worst case") {
  ExperimentConfig one;
  one.spectrum = {5};
  one.out_dir = scratch("verify_one");
  const RunManifest m = cmd_verify(one);
  CHECK(m.exit_code == kExitOk);
  CHECK(m.summary["families"].size() == 3);

  ExperimentConfig wc;
  wc.kappa = 10;
  wc.init = "worst-case";
  wc.out_dir = scratch("verify_wc");
  const RunManifest w = cmd_verify(wc);
  CHECK(w.exit_code == kExitOk);
  const auto report = nlohmann::json::parse(slurp(wc.out_dir / "verify_report.json"));
  CHECK(std::abs(report["seeds"][0]["empirical_rate"].get<double>() - 9.0 / 11) < 1e-6);
}

TEST_CASE("figure1 outputs") {
  ExperimentConfig cfg;
  cfg.out_dir = scratch("figure1");
  const RunManifest m = cmd_figure1(cfg);
  check_manifest_complete(m, cfg.out_dir);
  CHECK(m.summary["d1_non_increasing"] == true);
  CHECK(m.summary["d1_contraction_violations"] == 0);
  CHECK(m.summary["final_grad_ratio"].get<double>() <= 1e-10);
  const std::string svg = slurp(cfg.out_dir / "figure1.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(slurp(cfg.out_dir / "figure1_peaks.csv").rfind("k,index,peak", 0) == 0);

  cfg.iters = 1;
  cfg.out_dir = scratch("figure1_short");
  cmd_figure1(cfg);
  const std::string csv = slurp(cfg.out_dir / "figure1.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("find_peaks flags a towering coefficient") {
  const std::vector<Vector> d{{1, 1}, {1e-3, 1e-2}, {1e-2, 1e-4}, {1e-4, 1e-6}};
  const auto peaks = find_peaks(d);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0].k == 2);
  CHECK(peaks[0].index == 1);
  CHECK(peaks[0].dominance == doctest::Approx(100));
  CHECK(peaks[0].dropped);
  const std::vector<Vector> flat{{1, 1}, {1e-3, 1e-2}, {1e-2, 1e-4}, {5e-2, 1e-6}};
  CHECK_FALSE(find_peaks(flat).front().dropped);
}

TEST_CASE("sweep rates and ordering") {
  ExperimentConfig cfg;
  cfg.kappas = {10, 100, 1000};
  cfg.seeds = parse_seeds("0-19");
  cfg.sweep_worst_case = true;
  cfg.out_dir = scratch("sweep_a");
  const RunManifest m = cmd_sweep(cfg);
  check_manifest_complete(m, cfg.out_dir);
  std::istringstream lines(slurp(cfg.out_dir / "sweep.csv"));
  std::string line;
  std::getline(lines, line);
  CHECK(line == "kappa,seed,solver,empirical_rate,theta,sd_rate_bound,iters_to_tol");
  std::size_t bb = 0, wc = 0;
  while (std::getline(lines, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    REQUIRE(f.size() >= 6);
    if (f[3].empty()) continue;
    const double rate = std::stod(f[3]);
    const double theta = std::stod(f[4]);
    const double sd = std::stod(f[5]);
    if (f[2] == "bb") {
      CHECK(rate <= theta * 1.05);
      ++bb;
    } else if (f[2] == "bb-worst-case") {
      CHECK(std::abs(rate - sd) <= 1e-6);
      ++wc;
    }
  }
  CHECK(bb == 60);
  CHECK(wc == 60);

  ExperimentConfig again = cfg;
  again.out_dir = scratch("sweep_b");
  cmd_sweep(again);
  CHECK(slurp(cfg.out_dir / "sweep.csv") == slurp(again.out_dir / "sweep.csv"));
}

TEST_CASE("orbit command") {
  ExperimentConfig cfg;
  cfg.iters = 64;
  cfg.out_dir = scratch("orbit");
  const RunManifest m = cmd_orbit(cfg);
  CHECK(m.summary["matches_closed_form_exactly"] == true);
  check_manifest_complete(m, cfg.out_dir);
}

TEST_CASE("cli exit codes") {
  const std::string out = scratch("cli").string();
  CHECK(run_cli("solve --spectrum 1,3 --out-dir " + out) == 0);
  CHECK(run_cli("solve --bogus") == 2);
  CHECK(run_cli("solve --out-dir " + out) == 2);
  CHECK(run_cli("solve --spectrum 3,1 --out-dir " + out) == 3);
  CHECK(run_cli("verify --kappa 100 --seeds 0-4 --out-dir " + out) == 0);
  CHECK(run_cli("verify --kappa 10 --init worst-case --noise-floor 0 --out-dir " + out) == 1);
  CHECK(run_cli("orbit --lambda-lo 2 --lambda-hi 2 --out-dir " + out) == 3);
  CHECK(run_cli("figure1 --config /nonexistent.json --out-dir " + out) == 2);
}

TEST_CASE("cli honours config files and the output-dir variable") {
  const fs::path dir = scratch("cli_config");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "cfg.json") << R"({"spectrum": [1, 4], "iters": 3, "tol": 0})";
  }
  const fs::path out = dir / "from_env";
  const std::string env = "BBDYN_OUT_DIR=" + out.string() + " ";
  const std::string cmd = env + BBDYN_CLI + " solve --config " + (dir / "cfg.json").string() + " --iters 2 > /dev/null";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const std::string csv = slurp(out / "solve_bb_seed0.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["config"]["iters"] == 2);
}
