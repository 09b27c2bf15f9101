#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace feederopt::csv {

/// Splits one CSV record on commas. Fields are trimmed of surrounding
/// whitespace and a trailing '\r' is dropped; quoting is not supported.
std::vector<std::string> split(std::string_view line);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Strict number parse; throws ParseError with `context` on junk.
double parse_double(std::string_view text, std::string_view context);

/// Writes `content` to `path` atomically enough for our purposes (truncate + write),
/// creating parent directories.
void write_text(const std::filesystem::path& path, std::string_view content);

}  // namespace feederopt::csv
