#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bbdyn/linalg.hpp"
#include "bbdyn/precision.hpp"
#include "bbdyn/problem.hpp"
#include "json.hpp"

namespace bbdyn {

struct SolverConfig {
  int max_iters = 10000;
  /// Stop once ‖g_k‖ ≤ grad_tol·‖g_0‖.
  double grad_tol = 1e-12;
  bool record_coefficients = true;

  void validate() const;
};

enum class TerminationReason { Converged, MaxIters, ExactZeroGradient, Diverged };
enum class Method { BB, SD };

std::string_view to_string(TerminationReason reason);
std::string_view to_string(Method method);

/// ‖g_k‖ above this multiple of ‖g_0‖ aborts a run as Diverged.
inline constexpr double kDivergenceFactor = 1e12;

template <class Real>
struct BasicIterationRecord {
  int k = 0;
  std::vector<Real> x;
  std::vector<Real> g;
  Real grad_norm = 0;
  /// Stepsize that produced x_{k+1}; NaN on the final record.
  Real alpha = 0;
  /// Vᵀg_k, empty unless coefficients are recorded.
  std::vector<Real> d;
};

template <class Real>
struct BasicSolverTrajectory {
  Method method = Method::BB;
  std::vector<BasicIterationRecord<Real>> records;
  TerminationReason reason = TerminationReason::MaxIters;

  /// Number of steps taken (records minus one).
  int iterations() const { return static_cast<int>(records.size()) - 1; }
  std::vector<Real> grad_norms() const;
  std::vector<std::vector<Real>> coefficients() const;
};

using IterationRecord = BasicIterationRecord<double>;
using SolverTrajectory = BasicSolverTrajectory<double>;

/// (gᵀg)/(gᵀAg) for the previous gradient. Throws ZeroGradient if g = 0.
double bb_step_size(const SpectralProblem& p, std::span<const double> g_prev);
/// Exact line-search stepsize along −g: the same Rayleigh-quotient inverse,
/// evaluated at the current gradient.
double cauchy_step_size(const SpectralProblem& p, std::span<const double> g);

/// Barzilai-Borwein iteration. The first step is a Cauchy step; every later
/// step uses bb_step_size(g_{k-1}). Gradients follow g_{k+1} = g_k − α_k·A·g_k.
SolverTrajectory run_bb(const SpectralProblem& p, std::span<const double> x0,
                        const SolverConfig& cfg = {});
/// Steepest descent with exact line search.
SolverTrajectory run_sd(const SpectralProblem& p, std::span<const double> x0,
                        const SolverConfig& cfg = {});

/// Same iterations carried out in `Real`. For Extended the eigenbasis is
/// re-orthonormalized and A rebuilt in that precision, so that Vᵀg gives the
/// eigen-coefficients of the operator actually iterated.
template <class Real>
BasicSolverTrajectory<Real> run_bb_in(const SpectralProblem& p, std::span<const double> x0,
                                      const SolverConfig& cfg = {});
template <class Real>
BasicSolverTrajectory<Real> run_sd_in(const SpectralProblem& p, std::span<const double> x0,
                                      const SolverConfig& cfg = {});

/// Dispatches on `precision`; the result is rounded to binary64.
SolverTrajectory run_solver(Method method, const SpectralProblem& p, std::span<const double> x0,
                            const SolverConfig& cfg, Precision precision);

SolverTrajectory to_binary64(const BasicSolverTrajectory<Extended>& t);

/// Columns k, grad_norm, alpha, then d_1..d_n when coefficients were recorded.
std::string trajectory_csv(const SolverTrajectory& t);
nlohmann::json trajectory_json(const SolverTrajectory& t);

extern template struct BasicSolverTrajectory<double>;
extern template struct BasicSolverTrajectory<Extended>;

}  // namespace bbdyn
