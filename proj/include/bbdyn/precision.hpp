#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <string_view>

namespace bbdyn {

/// Software float with 50 decimal digits (about 166 bits).
using Extended = boost::multiprecision::cpp_bin_float_50;

/// Arithmetic used by the solvers and the coefficient recurrence. Binary64 is
/// the default; Extended is opt-in for long-horizon comparisons where the
/// dynamics amplify binary64 rounding.
enum class Precision { Binary64, Extended };

std::string_view to_string(Precision p);
Precision parse_precision(std::string_view text);

template <class Real>
double to_double(const Real& x) {
  return static_cast<double>(x);
}

}  // namespace bbdyn
