#include "gcnpsn/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace gcnpsn {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string format_optional(std::optional<double> v) {
  if (!v || std::isnan(*v)) return {};
  return format_double(*v);
}

}  // namespace gcnpsn
