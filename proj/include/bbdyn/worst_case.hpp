#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bbdyn/bounds.hpp"
#include "bbdyn/problem.hpp"
#include "bbdyn/solvers.hpp"

namespace bbdyn {

/// x_0 = A⁻¹(c + v_1 + v_n), applied through the eigenbasis so that
/// g_0 = v_1 + v_n. Throws DimensionTooSmall when n < 2.
Vector worst_case_x0(const SpectralProblem& p);

enum class OrbitMode { Float64, ExactRational };

std::string_view to_string(OrbitMode mode);

struct OrbitPoint {
  int k = 0;
  double a = 0.0;  // d_k^1
  double b = 0.0;  // d_k^n
  /// ‖g_k‖/‖g_{k-1}‖; NaN at k = 0.
  double grad_norm_ratio = 0.0;
};

/// The two live coefficients of the worst-case orbit, started from
/// d_0^1 = d_0^n = 1 with every interior coefficient zero.
struct TwoModeOrbit {
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  OrbitMode mode = OrbitMode::Float64;
  std::vector<OrbitPoint> points;

  /// Exact values, filled in ExactRational mode only.
  std::vector<mpq_class> a_exact;
  std::vector<mpq_class> b_exact;

  /// Float64 mode: first k with a_k² ≠ b_k² in binary64.
  std::optional<int> symmetry_break;
  /// Float64 mode: first k where |a_k| leaves ((κ−1)/(κ+1))^k by more than
  /// 1e-6 relative.
  std::optional<int> closed_form_departure;

  Vector grad_norms() const;
};

/// Exact parse of "0.001", "-2.5e-3", "7" or "1/3".
mpq_class parse_rational(std::string_view text);

/// Decimal rendering with `digits` significant digits.
std::string decimal_string(const mpq_class& q, int digits = 40);

/// Iterates the two-coefficient reduction of the BB recurrence. In exact mode
/// the double inputs are converted to rationals without rounding. Throws
/// DegenerateSpectrum unless 0 < lo < hi.
TwoModeOrbit run_orbit(double lambda_lo, double lambda_hi, int iters, OrbitMode mode);
TwoModeOrbit run_orbit_exact(const mpq_class& lambda_lo, const mpq_class& lambda_hi, int iters);

/// Columns k, a, b, grad_norm_ratio; exact orbits are written as decimal
/// strings of the rational values.
std::string orbit_csv(const TwoModeOrbit& orbit);

/// Interior coefficients must stay below this magnitude (relative to d_0 = 1).
inline constexpr double kInteriorTolerance = 1e-8;
/// Relative tolerance on ‖g_k‖/‖g_0‖ against ((κ−1)/(κ+1))^k.
inline constexpr double kOrbitRateTolerance = 1e-6;
/// The symmetry-break horizon is the first k with
/// |a_k² − b_k²| > kSymmetryBreakThreshold·(a_k² + b_k²).
inline constexpr double kSymmetryBreakThreshold = 1e-8;

inline constexpr char kOrbitInterior[] = "orbit_interior";
inline constexpr char kOrbitRate[] = "orbit_rate";

struct EmbeddedOrbitCheck {
  SolverTrajectory trajectory;
  VerificationReport report;
  /// Iterations (k) checked, for both families: k < horizon.
  int horizon = 0;
  /// True when the horizon came from a measured symmetry break rather than
  /// the end of the run.
  bool symmetry_broken = false;
  bool degenerate = false;
  double max_interior = 0.0;
};

/// Runs n-dimensional BB from worst_case_x0 for `iters` steps and checks the
/// interior coefficients and the closed-form gradient decay before the
/// measured symmetry-break horizon. For κ = 1 it reports the degenerate
/// one-step convergence instead.
EmbeddedOrbitCheck embed_orbit_check(const SpectralProblem& p, int iters);

}  // namespace bbdyn
