#pragma once

#include <stdexcept>
#include <string>

namespace rainmamba {

// Raised for invalid shapes, parameters, or data. The CLI maps it to exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& message) {
  if (!cond) throw Error(message);
}

}  // namespace rainmamba
