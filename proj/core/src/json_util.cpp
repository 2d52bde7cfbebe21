#include "json_util.h"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace adx3::detail {

Json parse_json(std::string_view bytes, std::string_view what) {
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what(), e.byte);
  }
}

std::vector<Json> parse_records(std::string_view bytes, std::string_view what) {
  std::size_t first = bytes.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  std::vector<Json> out;
  if (bytes[first] == '[') {
    Json doc = parse_json(bytes, what);
    for (auto& item : doc) out.push_back(std::move(item));
    return out;
  }
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    std::size_t nl = bytes.find('\n', offset);
    if (nl == std::string_view::npos) nl = bytes.size();
    std::string_view line = bytes.substr(offset, nl - offset);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        out.push_back(Json::parse(line.begin(), line.end()));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string(what) + ": " + e.what(), offset + e.byte);
      }
    }
    offset = nl + 1;
  }
  return out;
}

const Json& require(const Json& j, std::string_view key, std::string_view what) {
  if (!j.is_object()) throw ParseError(std::string(what) + ": expected an object", 0);
  auto it = j.find(std::string(key));
  if (it == j.end()) {
    throw ParseError(std::string(what) + ": missing field '" + std::string(key) + "'", 0);
  }
  return *it;
}

std::string get_string(const Json& j, std::string_view key, std::string_view what) {
  const Json& v = require(j, key, what);
  if (!v.is_string()) {
    throw ParseError(std::string(what) + ": field '" + std::string(key) + "' must be a string", 0);
  }
  return v.get<std::string>();
}

double get_number(const Json& j, std::string_view key, std::string_view what) {
  const Json& v = require(j, key, what);
  if (!v.is_number()) {
    throw ParseError(std::string(what) + ": field '" + std::string(key) + "' must be a number", 0);
  }
  return v.get<double>();
}

long long get_integer(const Json& j, std::string_view key, std::string_view what) {
  const Json& v = require(j, key, what);
  if (!v.is_number_integer()) {
    throw ParseError(std::string(what) + ": field '" + std::string(key) + "' must be an integer",
                     0);
  }
  return v.get<long long>();
}

bool get_bool(const Json& j, std::string_view key, std::string_view what) {
  const Json& v = require(j, key, what);
  if (!v.is_boolean()) {
    throw ParseError(std::string(what) + ": field '" + std::string(key) + "' must be a boolean",
                     0);
  }
  return v.get<bool>();
}

std::optional<std::string> get_optional_string(const Json& j, std::string_view key,
                                               std::string_view what) {
  auto it = j.find(std::string(key));
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ParseError(std::string(what) + ": field '" + std::string(key) + "' must be a string", 0);
  }
  return it->get<std::string>();
}

std::optional<double> get_optional_number(const Json& j, std::string_view key,
                                          std::string_view what) {
  auto it = j.find(std::string(key));
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) {
    throw ParseError(std::string(what) + ": field '" + std::string(key) + "' must be a number", 0);
  }
  return it->get<double>();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("short write to " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace adx3::detail
