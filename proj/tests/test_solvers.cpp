#include <cmath>

#include "bbdyn/error.hpp"
#include "bbdyn/problem.hpp"
#include "bbdyn/rng.hpp"
#include "bbdyn/solvers.hpp"
#include "doctest.h"

using namespace bbdyn;

namespace {

Vector uniform_point(std::size_t n, std::uint64_t seed) {
  Rng rng(seed, streams::kInitialPoint);
  Vector x(n);
  for (double& v : x) v = rng.uniform01();
  return x;
}

// x with A x − c = V d.
Vector point_with_coefficients(const SpectralProblem& p, const Vector& d) {
  Vector scaled(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) scaled[i] = d[i] / p.eigenvalues()[i];
  Vector x = from_coefficients(p, scaled);
  const Vector shift = from_coefficients(p, [&] {
    Vector cd = to_coefficients(p, p.c());
    for (std::size_t i = 0; i < cd.size(); ++i) cd[i] /= p.eigenvalues()[i];
    return cd;
  }());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += shift[i];
  return x;
}

}  // namespace

TEST_CASE("bb_step_size examples") {
  CHECK(bb_step_size(diagonal_problem(Vector{1, 1}), Vector{1, 1}) == 1.0);
  CHECK(bb_step_size(diagonal_problem(Vector{1, 3}), Vector{1, 1}) == 0.5);
  CHECK(bb_step_size(diagonal_problem(Vector{1, 3}), Vector{1, 0}) == 1.0);
  CHECK(cauchy_step_size(diagonal_problem(Vector{1, 3}), Vector{1, 1}) == 0.5);
}

TEST_CASE("step sizes survive tiny gradients") {
  const SpectralProblem p = diagonal_problem(Vector{1, 3});
  CHECK(bb_step_size(p, Vector{1e-200, 1e-200}) == 0.5);
  CHECK(bb_step_size(p, Vector{1e200, 1e200}) == 0.5);
  CHECK_THROWS_AS(bb_step_size(p, Vector{0, 0}), Error);
}

TEST_CASE("one-dimensional BB terminates with an exact zero gradient") {
  const SpectralProblem p = diagonal_problem(Vector{3.7}, Vector{0.4});
  const SolverTrajectory t = run_bb(p, Vector{-2.1}, {});
  CHECK(t.iterations() == 1);
  CHECK(t.records[1].g[0] == 0.0);
  CHECK(t.reason == TerminationReason::ExactZeroGradient);
}

TEST_CASE("single-eigenvalue problems converge in one step") {
  const SpectralProblem p = synthesize(Vector{2, 2, 2}, 5);
  for (Method m : {Method::BB, Method::SD}) {
    const SolverTrajectory t = run_solver(m, p, Vector{1, -3, 0.5}, {}, Precision::Binary64);
    CHECK(t.iterations() == 1);
    CHECK(t.reason == TerminationReason::ExactZeroGradient);
    for (double g : t.records[1].g) CHECK(g == 0.0);
  }
}

TEST_CASE("BB from the two-mode worst case") {
  const SpectralProblem p = diagonal_problem(Vector{1, 3});
  SolverConfig cfg;
  cfg.max_iters = 1;
  const SolverTrajectory t = run_bb(p, Vector{1, 1.0 / 3}, cfg);
  CHECK(t.records[1].d == Vector{0.5, -0.5});
  CHECK(t.records[0].alpha == 0.5);
  CHECK(std::isnan(t.records[1].alpha));
}

TEST_CASE("BB converges on the four-eigenvalue preset") {
  const SpectralProblem p = diagonal_problem(Vector{0.001, 0.01, 0.1, 1});
  SolverConfig cfg;
  cfg.max_iters = 200;
  cfg.grad_tol = 1e-10;
  const SolverTrajectory t = run_bb(p, uniform_point(4, 0), cfg);
  CHECK(t.reason == TerminationReason::Converged);
  CHECK(t.records.back().grad_norm <= 1e-10 * t.records.front().grad_norm);
  CHECK(t.iterations() < 200);
}

TEST_CASE("SD examples") {
  SolverTrajectory t = run_sd(diagonal_problem(Vector{1, 1, 1}), Vector{4, 5, 6}, {});
  CHECK(t.iterations() == 1);

  SolverConfig cfg;
  cfg.max_iters = 40;
  cfg.grad_tol = 0.0;
  t = run_sd(diagonal_problem(Vector{1, 3}), Vector{1, 1.0 / 3}, cfg);
  for (std::size_t k = 1; k < t.records.size(); ++k) {
    CHECK(t.records[k].grad_norm / t.records[k - 1].grad_norm == doctest::Approx(0.5).epsilon(1e-12));
  }

  cfg.max_iters = 5;
  const SpectralProblem p = synthesize(Vector{1, 2, 7}, 1);
  t = run_sd(p, uniform_point(3, 1), cfg);
  CHECK(t.records.size() == 6);
  CHECK(t.reason == TerminationReason::MaxIters);
  for (std::size_t k = 0; k < t.records.size(); ++k) CHECK(t.records[k].k == static_cast<int>(k));
}

TEST_CASE("config validation") {
  SolverConfig cfg;
  cfg.max_iters = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.max_iters = 5;
  cfg.grad_tol = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  const SpectralProblem p = diagonal_problem(Vector{1, 3});
  CHECK_THROWS_AS(run_bb(p, Vector{1, 2, 3}, {}), Error);
}

TEST_CASE("zero initial gradient is reported") {
  const SpectralProblem p = diagonal_problem(Vector{1, 3}, Vector{2, 3});
  const SolverTrajectory t = run_bb(p, Vector{2, 1}, {});
  CHECK(t.iterations() == 0);
  CHECK(t.reason == TerminationReason::ExactZeroGradient);
}

TEST_CASE("translation invariance of the gradient sequence") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Vector lam = random_spectrum(5, 100, seed);
    const SpectralProblem p = synthesize(lam, seed);
    Rng rng(seed, 20);
    Vector shift(5), c(5);
    for (double& s : shift) s = rng.normal();
    const Vector as = p.matrix() * shift;
    const SpectralProblem q = synthesize(lam, seed, as);
    const Vector x0 = uniform_point(5, seed);
    Vector y0 = x0;
    for (std::size_t i = 0; i < 5; ++i) y0[i] += shift[i];
    SolverConfig cfg;
    cfg.max_iters = 30;
    const SolverTrajectory a = run_bb(p, x0, cfg);
    const SolverTrajectory b = run_bb(q, y0, cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t k = 0; k < 5; ++k) {
      for (std::size_t i = 0; i < 5; ++i) {
        CHECK(b.records[k].g[i] == doctest::Approx(a.records[k].g[i]).scale(a.records[0].grad_norm).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("coefficient traces do not depend on the eigenbasis") {
  const Vector lam{1, 2, 10, 40};
  const Vector d0{0.3, -1.2, 0.8, 0.5};
  SolverConfig cfg;
  cfg.max_iters = 15;
  cfg.grad_tol = 0.0;
  const SpectralProblem ref = diagonal_problem(lam);
  const SolverTrajectory base = run_bb(ref, point_with_coefficients(ref, d0), cfg);
  for (std::uint64_t seed = 1; seed < 6; ++seed) {
    const SpectralProblem p = synthesize(lam, seed);
    const SolverTrajectory t = run_bb(p, point_with_coefficients(p, d0), cfg);
    REQUIRE(t.records.size() == base.records.size());
    for (std::size_t k = 0; k < 6; ++k) {
      for (std::size_t i = 0; i < 4; ++i) {
        CHECK(t.records[k].d[i] == doctest::Approx(base.records[k].d[i]).scale(base.records[k].grad_norm).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("extended precision tracks binary64 early on") {
  const SpectralProblem p = synthesize(random_spectrum(6, 100, 2), 2);
  const Vector x0 = uniform_point(6, 2);
  SolverConfig cfg;
  cfg.max_iters = 8;
  const SolverTrajectory lo = run_solver(Method::BB, p, x0, cfg, Precision::Binary64);
  const SolverTrajectory hi = run_solver(Method::BB, p, x0, cfg, Precision::Extended);
  REQUIRE(lo.records.size() == hi.records.size());
  for (std::size_t k = 0; k < lo.records.size(); ++k) {
    CHECK(hi.records[k].grad_norm == doctest::Approx(lo.records[k].grad_norm).epsilon(1e-8));
  }
}

TEST_CASE("trajectory outputs") {
  SolverConfig cfg;
  cfg.max_iters = 2;
  cfg.grad_tol = 0;
  const SolverTrajectory t = run_bb(diagonal_problem(Vector{1, 2}), Vector{1, 1}, cfg);
  const std::string csv = trajectory_csv(t);
  CHECK(csv.rfind("k,grad_norm,alpha,d_1,d_2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  const auto j = trajectory_json(t);
  CHECK(j["records"].size() == 3);
  CHECK(j["termination"] == "MaxIters");
  CHECK(trajectory_csv(t) == trajectory_csv(run_bb(diagonal_problem(Vector{1, 2}), Vector{1, 1}, cfg)));
}
