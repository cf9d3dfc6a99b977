#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace grim::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);

/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// Strict decimal parse of a positive int; no sign, no trailing garbage.
std::optional<int> parse_positive_int(std::string_view s);

/// Comparison key for beat descriptions: runs of whitespace collapsed,
/// trimmed, trailing periods removed, case preserved.
std::string normalize_description(std::string_view s);

/// Collapses newlines and runs of whitespace to single spaces and trims.
std::string single_line(std::string_view s);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ", or $SOURCE_DATE_EPOCH when set.
std::string utc_timestamp();

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace grim::text
