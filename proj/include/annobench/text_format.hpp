#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace annobench {

// 17 significant digits: enough to round-trip an IEEE-754 double exactly,
// so serialized numbers are stable across runs.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string json_escape(std::string_view s);

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

// Writes to "<path>.tmp" then renames, so a failed run never leaves a
// partial output file behind.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);
void write_file_atomic(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& content);

}  // namespace annobench
