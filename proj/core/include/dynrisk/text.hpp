#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dynrisk::text {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

/// Fixed-point with `digits` decimals.
std::string format_fixed(double value, int digits);

double parse_double(std::string_view field, std::size_t line = 0);
long long parse_int(std::string_view field, std::size_t line = 0);

/// Splits one CSV record. Supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv(std::string_view line, std::size_t line_number = 0);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_field(std::string_view field);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

} // namespace dynrisk::text
