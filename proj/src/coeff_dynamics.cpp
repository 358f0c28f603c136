#include "bbdyn/coeff_dynamics.hpp"

#include <cmath>

#include "bbdyn/error.hpp"
#include "bbdyn/io.hpp"

namespace bbdyn {
namespace {

using std::abs;
using std::frexp;
using std::ldexp;

void check_lambda(std::span<const double> lambda, std::size_t n) {
  if (lambda.size() != n) throw Error(ErrorCode::DimensionMismatch, "eigenvalue and coefficient lengths differ");
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (!(lambda[i] > 0.0) || (i > 0 && lambda[i] < lambda[i - 1])) {
      throw Error(ErrorCode::BadSpectrum, "eigenvalues must be positive and ascending");
    }
  }
}

template <class Real>
bool all_zero(std::span<const Real> v) {
  for (const Real& x : v)
    if (x != 0) return false;
  return true;
}

/// Squared coefficients after an exact power-of-two rescale.
template <class Real>
std::vector<Real> scaled_weights(std::span<const Real> d) {
  Real scale = 0;
  for (const Real& x : d) scale = std::max<Real>(scale, abs(x));
  int exponent = 0;
  (void)frexp(scale, &exponent);
  std::vector<Real> w(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) {
    const Real dj = ldexp(d[j], -exponent);
    w[j] = dj * dj;
  }
  return w;
}

template <class Real>
Real weighted_gap(std::span<const double> lambda, const std::vector<Real>& w, std::size_t i) {
  Real s = 0;
  for (std::size_t j = 0; j < w.size(); ++j) s += (Real(lambda[j]) - Real(lambda[i])) * w[j];
  return s;
}

template <class Real>
std::vector<Mode> all_modes(std::span<const double> lambda, std::span<const Real> d) {
  std::vector<Mode> modes(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) modes[i] = classify_mode<Real>(lambda, d, i);
  return modes;
}

}  // namespace

template <class Real>
std::vector<Real> recurrence_multipliers(std::span<const double> lambda, std::span<const Real> d) {
  check_lambda(lambda, d.size());
  if (all_zero<Real>(d)) throw Error(ErrorCode::ZeroPreviousCoefficients, "d_{k-1} is zero");
  const std::vector<Real> w = scaled_weights<Real>(d);
  Real denom = 0;
  for (std::size_t j = 0; j < w.size(); ++j) denom += Real(lambda[j]) * w[j];
  std::vector<Real> m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m[i] = weighted_gap<Real>(lambda, w, i) / denom;
  return m;
}

template <class Real>
Real mode_indicator(std::span<const double> lambda, std::span<const Real> d, std::size_t i) {
  check_lambda(lambda, d.size());
  if (i >= d.size()) throw Error(ErrorCode::IndexOutOfRange, "index " + std::to_string(i));
  if (all_zero<Real>(d)) return Real(0);
  return weighted_gap<Real>(lambda, scaled_weights<Real>(d), i);
}

template <class Real>
Mode classify_mode(std::span<const double> lambda, std::span<const Real> d, std::size_t i) {
  return mode_indicator<Real>(lambda, d, i) >= 0 ? Mode::Shrinking : Mode::Fluctuation;
}

template <class Real>
BasicCoefficientState<Real> first_step(std::span<const double> lambda, std::span<const Real> d0) {
  check_lambda(lambda, d0.size());
  if (all_zero<Real>(d0)) throw Error(ErrorCode::ZeroInitialGradient, "d_0 is zero");
  const std::vector<Real> m = recurrence_multipliers<Real>(lambda, d0);
  BasicCoefficientState<Real> s;
  s.lambda.assign(lambda.begin(), lambda.end());
  s.d_prev.assign(d0.begin(), d0.end());
  s.d_curr.resize(d0.size());
  for (std::size_t i = 0; i < d0.size(); ++i) s.d_curr[i] = d0[i] * m[i];
  s.k = 1;
  return s;
}

template <class Real>
BasicCoefficientState<Real> step(const BasicCoefficientState<Real>& s) {
  const std::vector<Real> m = recurrence_multipliers<Real>(s.lambda, s.d_prev);
  BasicCoefficientState<Real> next;
  next.lambda = s.lambda;
  next.d_prev = s.d_curr;
  next.d_curr.resize(s.d_curr.size());
  for (std::size_t i = 0; i < s.d_curr.size(); ++i) next.d_curr[i] = s.d_curr[i] * m[i];
  next.k = s.k + 1;
  return next;
}

template <class Real>
std::vector<BasicSimulationRecord<Real>> simulate_in(std::span<const double> lambda,
                                                     std::span<const Real> d0, int iters) {
  if (iters < 1) throw Error(ErrorCode::Config, "iters must be at least 1");
  std::vector<BasicSimulationRecord<Real>> out;
  out.reserve(static_cast<std::size_t>(iters) + 1);

  BasicCoefficientState<Real> s = first_step<Real>(lambda, d0);
  out.push_back({0, s.d_prev, all_modes<Real>(lambda, s.d_prev)});
  out.push_back({1, s.d_curr, all_modes<Real>(lambda, s.d_curr)});
  while (s.k < iters && !all_zero<Real>(s.d_curr)) {
    s = step(s);
    out.push_back({s.k, s.d_curr, all_modes<Real>(lambda, s.d_curr)});
  }
  return out;
}

#define BBDYN_INSTANTIATE(Real)                                                                       \
  template std::vector<Real> recurrence_multipliers<Real>(std::span<const double>,                   \
                                                          std::span<const Real>);                    \
  template Real mode_indicator<Real>(std::span<const double>, std::span<const Real>, std::size_t);  \
  template Mode classify_mode<Real>(std::span<const double>, std::span<const Real>, std::size_t);   \
  template BasicCoefficientState<Real> first_step<Real>(std::span<const double>,                     \
                                                        std::span<const Real>);                      \
  template BasicCoefficientState<Real> step<Real>(const BasicCoefficientState<Real>&);               \
  template std::vector<BasicSimulationRecord<Real>> simulate_in<Real>(std::span<const double>,       \
                                                                      std::span<const Real>, int);

BBDYN_INSTANTIATE(double)
BBDYN_INSTANTIATE(Extended)
#undef BBDYN_INSTANTIATE

std::string simulation_csv(const std::vector<SimulationRecord>& records) {
  const std::size_t n = records.empty() ? 0 : records.front().d.size();
  std::string out = "k";
  for (std::size_t i = 1; i <= n; ++i) out += ",d_" + std::to_string(i);
  for (std::size_t i = 1; i <= n; ++i) out += ",mode_" + std::to_string(i);
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.k);
    for (double d : r.d) out += ',' + io::format_double(d);
    for (Mode m : r.modes) {
      out += ',';
      out += mode_letter(m);
    }
    out += '\n';
  }
  return out;
}

}  // namespace bbdyn
