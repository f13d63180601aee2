#pragma once

#include <stdexcept>
#include <string>

namespace mtrd {

// Base for all library failures. Messages name the offending argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A product alphabet or n-letter tensor would exceed the configured entry cap.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace mtrd
