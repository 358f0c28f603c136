#pragma once

#include <span>
#include <string>
#include <vector>

#include "bbdyn/coeff_dynamics.hpp"
#include "bbdyn/linalg.hpp"
#include "bbdyn/solvers.hpp"
#include "json.hpp"

namespace bbdyn {

/// Constants of the R-linear envelope |d_k^i| ≤ F_i·θ^k.
struct BoundLedger {
  double kappa = 1.0;
  /// 1 − 1/κ.
  double theta = 0.0;
  /// Per-index one-step ratio bound max{λ_i/λ_1 − 1, 1 − λ_i/λ_n}.
  Vector c;
  /// Envelope constants, built in ascending index order.
  Vector f;
  /// The starting coefficients the ledger was built from.
  Vector d0;
  Vector d1;
};

/// F_1 = |d_0^1|, F_i = max{|d_0^i|, |d_1^i|/θ, θ⁻²·C_i²·sqrt(Σ_{j<i} F_j²)}.
/// Throws DegenerateSpectrum when κ = 1 and n ≥ 2.
BoundLedger ledger(std::span<const double> lambda, std::span<const double> d0,
                   std::span<const double> d1);

/// Coefficient vectors d_0, d_1, ... of one run, with the spectrum they live in.
struct CoefficientTrace {
  Vector lambda;
  std::vector<Vector> d;

  static CoefficientTrace from_solver(const SpectralProblem& p, const SolverTrajectory& t);
  static CoefficientTrace from_simulation(std::span<const double> lambda,
                                          const std::vector<SimulationRecord>& records);
};

inline constexpr char kGeneralRatio[] = "general_ratio";
inline constexpr char kConditionalContraction[] = "conditional_contraction";
inline constexpr char kEnvelope[] = "envelope";
inline constexpr char kDegenerate[] = "degenerate_zero";

/// An entry passes iff lhs ≤ rhs·(1 + rel_slack) + abs_floor
/// + noise_floor·scale, where scale is ‖d_k‖_∞ for the envelope and
/// (1 + κ)‖d_k‖_∞ + ‖d_{k+1}‖_∞ for the per-step families. The noise term is
/// zero unless the caller opts in.
struct CheckOptions {
  double rel_slack = 1e-9;
  double abs_floor = 1e-300;
  double noise_floor = 0.0;
};

struct CheckEntry {
  std::string family;
  /// One-based coefficient index, matching the d_1..d_n CSV columns.
  std::size_t i = 0;
  int k = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = true;

  double margin() const { return rhs - lhs; }
};

struct FamilySummary {
  std::string family;
  std::size_t checked = 0;
  std::size_t passed = 0;
  std::size_t skipped = 0;
  double worst_margin = 0.0;
  std::size_t argmin_i = 0;
  int argmin_k = 0;

  std::size_t failed() const { return checked - passed; }
};

struct VerificationReport {
  std::vector<CheckEntry> entries;
  std::vector<FamilySummary> families;

  /// Appends entries of one family and its summary.
  void add_family(const std::string& family, std::vector<CheckEntry> family_entries,
                  std::size_t skipped = 0);
  void merge(const VerificationReport& other);

  const FamilySummary* family(const std::string& name) const;
  std::size_t failures() const;
  bool all_passed() const { return failures() == 0; }

  nlohmann::json summary_json() const;
  std::string entries_csv() const;
};

/// |d_{k+1}^i| ≤ C_i·|d_k^i| for every k ≥ 1.
VerificationReport check_general_ratio(const CoefficientTrace& trace, const BoundLedger& ledger,
                                       const CheckOptions& opts = {});

/// |d_{k+1}^i| ≤ θ·|d_k^i| whenever d_{k-1}^i is Shrinking, or is Fluctuation
/// with (d_{k-1}^i)² ≥ Σ_{j<i}(d_{k-1}^j)². Other transitions are counted as
/// skipped.
VerificationReport check_conditional_contraction(const CoefficientTrace& trace,
                                                 const BoundLedger& ledger,
                                                 const CheckOptions& opts = {});

/// |d_k^i| ≤ F_i·θ^k for every recorded k ≥ 1. Throws LedgerMismatch when
/// the ledger was built from different starting coefficients.
VerificationReport check_envelope(const CoefficientTrace& trace, const BoundLedger& ledger,
                                  const CheckOptions& opts = {});

/// κ = 1 with n ≥ 2: the first step is exact, so d_k = 0 for every k ≥ 1.
VerificationReport check_degenerate(const CoefficientTrace& trace, const CheckOptions& opts = {});

/// Builds the ledger from the trace's own d_0, d_1 and runs every family that
/// applies (the degenerate check alone when κ = 1 and n ≥ 2).
VerificationReport verify_trace(const CoefficientTrace& trace, const CheckOptions& opts = {});

/// exp of the least-squares slope of log‖g_k‖ against k. Needs at least 10
/// strictly positive norms.
double empirical_rate(std::span<const double> grad_norms);

}  // namespace bbdyn
