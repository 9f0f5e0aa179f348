#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace scopefe::csv {

/// Splits RFC 4180 text into records. Handles quoted fields, doubled quotes,
/// CRLF line endings and a leading UTF-8 byte order mark. Blank lines are
/// skipped.
std::vector<std::vector<std::string>> parse(std::string_view text);

/// Quotes a field when it contains a delimiter, quote or line break.
std::string escape(std::string_view field);

/// Joins escaped fields with commas (no trailing newline).
std::string join(const std::vector<std::string>& fields);

/// Shortest round-trip decimal form; empty for NaN.
std::string format_double(double v);

}  // namespace scopefe::csv
