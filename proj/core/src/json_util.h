// Internal JSON and file helpers. Not installed.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adx3/model.h"

namespace adx3::detail {

/// Parses a JSON document; syntax errors become ParseError carrying the byte offset.
Json parse_json(std::string_view bytes, std::string_view what);

/// Accepts either a JSON array of records or JSON Lines (one object per line).
std::vector<Json> parse_records(std::string_view bytes, std::string_view what);

const Json& require(const Json& j, std::string_view key, std::string_view what);
std::string get_string(const Json& j, std::string_view key, std::string_view what);
double get_number(const Json& j, std::string_view key, std::string_view what);
long long get_integer(const Json& j, std::string_view key, std::string_view what);
bool get_bool(const Json& j, std::string_view key, std::string_view what);
std::optional<std::string> get_optional_string(const Json& j, std::string_view key,
                                               std::string_view what);
std::optional<double> get_optional_number(const Json& j, std::string_view key,
                                          std::string_view what);

/// Two-space indented dump with a trailing newline.
std::string dump(const Json& j);

std::string read_file(const std::filesystem::path& path);
/// Writes via a sibling temp file and rename.
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// printf-style fixed formatting ("%.{decimals}f").
std::string fixed(double value, int decimals);

/// FNV-1a 64-bit; used for stable content-derived identifiers.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace adx3::detail
