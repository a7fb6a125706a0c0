#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lcscreen::text {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

// Strict full-field parse; std::nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Splits one CSV record. Double-quoted fields may contain commas and doubled
// quotes. A trailing '\r' is dropped.
std::vector<std::string> split_csv(std::string_view line);

// Quotes a field only when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);

std::string trim(std::string_view s);

// Writes to "<path>.tmp" and renames over `path`.
void atomic_write(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

}  // namespace lcscreen::text
