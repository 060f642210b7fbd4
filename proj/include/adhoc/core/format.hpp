#pragma once

#include <string>
#include <string_view>

namespace adhoc {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);
// Fixed number of decimals, for human-facing report tables.
std::string format_fixed(double value, int decimals);
// Strict full-string parse; throws ValidationError on trailing garbage.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::string trim(std::string_view text);

}  // namespace adhoc
