#pragma once

// Small text helpers shared by the file formats.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace keydyn::text {

/// Shortest decimal string that parses back to exactly `v`.
std::string format_real(double v);

/// Strict parse of a whole field; returns false on trailing junk or overflow.
bool parse_real(std::string_view s, double& out);
bool parse_int(std::string_view s, std::int64_t& out);
bool parse_uint(std::string_view s, std::uint64_t& out);

std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> lines(std::string_view s);

/// FNV-1a 64-bit.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace keydyn::text
