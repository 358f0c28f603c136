#pragma once

#include <cstdint>
#include <random>

namespace bbdyn {

/// Seedable generator whose output is identical on every platform.
///
/// Wraps std::mt19937_64 (its output sequence is fixed by the standard) and
/// derives doubles by hand, since the standard distributions are
/// implementation-defined. A (seed, stream) pair selects an independent
/// sequence so that, for example, the basis and the initial point of one run
/// never share draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stream identifiers used by the harness.
namespace streams {
inline constexpr std::uint64_t kBasis = 1;
inline constexpr std::uint64_t kInitialPoint = 2;
inline constexpr std::uint64_t kSpectrum = 3;
inline constexpr std::uint64_t kLinearTerm = 4;
}  // namespace streams

}  // namespace bbdyn
