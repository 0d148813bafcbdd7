#pragma once

#include <stdexcept>
#include <string>

namespace damsa {

// Malformed or insufficient input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace damsa
