#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace emflow::csv {

/// Decimal with 17 significant digits, so every double round-trips.
std::string number(double value);

std::vector<std::string> split_line(std::string_view line);

/// Strict parse of a whole cell; throws emflow::InvalidArgument.
double parse_number(std::string_view cell);

}  // namespace emflow::csv
