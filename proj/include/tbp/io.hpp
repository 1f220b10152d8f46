#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace tbp::io {

/// Shortest text that reads back to the same double ("%.17g" style).
std::string format_double(double v);

/// Writes `content` to `<path>.partial` and renames it into place, so a
/// half-written file never carries its final name. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace tbp::io
