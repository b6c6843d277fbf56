#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace driftbench::csv {

std::vector<std::string_view> split(std::string_view line, char sep = ',');

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

/// Strict parse: whole field must be a finite decimal number.
std::optional<double> parse_finite(std::string_view field);

std::string_view trim(std::string_view s);

}  // namespace driftbench::csv
