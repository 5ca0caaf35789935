#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cheq {

/// Fixed-point formatting used for all emitted tables; "-0" is normalized
/// to "0" so repeated runs are byte-identical.
std::string fmt_fixed(double v, int digits);

/// Shortest round-trip-safe decimal for data CSVs (6 fractional digits).
std::string fmt_value(double v);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string lower(std::string_view s);

/// FNV-1a 64-bit over raw bytes; stable across platforms, used for the
/// run manifest.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

/// Whole-file read; throws IoError.
std::string read_file_bytes(const std::string& path);

double parse_double(std::string_view s, bool* ok);
long parse_long(std::string_view s, bool* ok);

}  // namespace cheq
