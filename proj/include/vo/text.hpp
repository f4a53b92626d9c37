#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the line-oriented file formats.
namespace vo::text {

std::string_view trim(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with(std::string_view s, std::string_view prefix);

/// Splits "key=value"; nullopt when there is no '='.
std::optional<std::pair<std::string, std::string>> split_kv(std::string_view s);

/// [A-Za-z0-9_-]+
bool is_token(std::string_view s);

std::optional<std::int64_t> parse_int(std::string_view s);

/// 64-bit FNV-1a rendered as 16 lowercase hex digits.
std::string digest(std::string_view payload);

/// Lines of a file or string, without trailing '\r'.
std::vector<std::string> lines(std::string_view content);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace vo::text
