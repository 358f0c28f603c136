#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace bbdyn::io {

/// Shortest form that round-trips with 17 significant digits ("%.17g").
std::string format_double(double x);

/// Writes `contents` to a sibling temporary file and renames it into place,
/// so readers never observe a partially written file.
void atomic_write(const std::filesystem::path& path, std::string_view contents);

}  // namespace bbdyn::io
