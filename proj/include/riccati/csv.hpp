#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace riccati::csv {

/// Splits one CSV line on commas (no quoting; fields are trimmed).
std::vector<std::string> split_line(const std::string& line);

/// Reads all non-empty, non-comment ('#') lines of a file.
/// Throws ConfigError when the file cannot be opened.
std::vector<std::string> read_lines(const std::string& path);

double parse_double(const std::string& field, const std::string& context);

/// Full double precision: shortest representation that round-trips
/// (printf %.17g).
std::string format_double(double value);

/// FNV-1a 64-bit digest of a byte string (used for input digests and
/// determinism checks).
std::uint64_t fnv1a(const void* data, std::size_t size);
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace riccati::csv
