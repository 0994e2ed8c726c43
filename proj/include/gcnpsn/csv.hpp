#pragma once

#include <optional>
#include <string>

namespace gcnpsn {

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Empty field for nullopt or NaN.
std::string format_optional(std::optional<double> v);

}  // namespace gcnpsn
