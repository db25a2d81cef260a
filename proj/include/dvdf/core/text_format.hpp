#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dvdf {

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double x);

/// Strict parse of a whole token; throws InvalidInput on trailing junk.
double parse_double(std::string_view text);
unsigned long long parse_unsigned(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char delim);
std::string_view trim(std::string_view text);

} // namespace dvdf
