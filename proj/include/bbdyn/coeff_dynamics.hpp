#pragma once

#include <span>
#include <string>
#include <vector>

#include "bbdyn/linalg.hpp"
#include "bbdyn/precision.hpp"

namespace bbdyn {

/// Coefficients of the gradient in the eigenbasis at two consecutive
/// iterations. The BB recurrence maps (d_{k-1}, d_k) to (d_k, d_{k+1}) with
///
///   d_{k+1}^i = d_k^i · Σ_j (λ_j − λ_i)(d_{k-1}^j)² / Σ_j λ_j (d_{k-1}^j)².
template <class Real>
struct BasicCoefficientState {
  Vector lambda;
  std::vector<Real> d_prev;
  std::vector<Real> d_curr;
  int k = 0;
};

using CoefficientState = BasicCoefficientState<double>;

enum class Mode { Shrinking, Fluctuation };

inline char mode_letter(Mode m) { return m == Mode::Shrinking ? 'S' : 'F'; }

/// Multipliers m_i = Σ_j (λ_j − λ_i) w_j / Σ_j λ_j w_j with w_j = (d^j)².
/// `d` is rescaled by a power of two first, so the result is scale-free.
/// Throws ZeroPreviousCoefficients when d = 0.
template <class Real>
std::vector<Real> recurrence_multipliers(std::span<const double> lambda, std::span<const Real> d);

/// Σ_j (λ_j − λ_i)(d^j)² up to a positive power-of-two factor; its sign
/// decides the mode of index i.
template <class Real>
Real mode_indicator(std::span<const double> lambda, std::span<const Real> d, std::size_t i);

/// Shrinking iff Σ_j (λ_j − λ_i)(d^j)² ≥ 0. `i` is zero-based.
template <class Real>
Mode classify_mode(std::span<const double> lambda, std::span<const Real> d, std::size_t i);

inline Mode classify_mode(std::span<const double> lambda, std::span<const double> d, std::size_t i) {
  return classify_mode<double>(lambda, d, i);
}

/// Cauchy first step d_1 = d_0 ∘ m(d_0). Throws ZeroInitialGradient on d_0 = 0.
template <class Real>
BasicCoefficientState<Real> first_step(std::span<const double> lambda, std::span<const Real> d0);

inline CoefficientState first_step(std::span<const double> lambda, std::span<const double> d0) {
  return first_step<double>(lambda, d0);
}

/// One BB step. Throws ZeroPreviousCoefficients when d_prev = 0.
template <class Real>
BasicCoefficientState<Real> step(const BasicCoefficientState<Real>& s);

template <class Real>
struct BasicSimulationRecord {
  int k = 0;
  std::vector<Real> d;
  std::vector<Mode> modes;
};

using SimulationRecord = BasicSimulationRecord<double>;

/// Runs first_step then step up to `iters` times. Returns records for
/// k = 0..iters, or fewer when d_k hits exactly zero (a fixed point; the
/// sequence ends at that record).
template <class Real>
std::vector<BasicSimulationRecord<Real>> simulate_in(std::span<const double> lambda,
                                                     std::span<const Real> d0, int iters);

inline std::vector<SimulationRecord> simulate(std::span<const double> lambda, std::span<const double> d0,
                                              int iters) {
  return simulate_in<double>(lambda, d0, iters);
}

/// Columns k, d_1..d_n, mode_1..mode_n with modes written as S or F.
std::string simulation_csv(const std::vector<SimulationRecord>& records);

}  // namespace bbdyn
