#include "bbdyn/precision.hpp"

#include <string>

#include "bbdyn/error.hpp"

namespace bbdyn {

std::string_view to_string(Precision p) { return p == Precision::Binary64 ? "binary64" : "extended"; }

Precision parse_precision(std::string_view text) {
  if (text == "binary64" || text == "double") return Precision::Binary64;
  if (text == "extended") return Precision::Extended;
  throw Error(ErrorCode::Config, "unknown precision '" + std::string(text) + "'");
}

}  // namespace bbdyn
