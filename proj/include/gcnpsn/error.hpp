#pragma once

#include <stdexcept>
#include <string>

namespace gcnpsn {

// Raised for every contract violation in the library: bad shapes, malformed
// files, invalid configuration.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gcnpsn
