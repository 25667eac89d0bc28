#pragma once

#include <stdexcept>
#include <string>

namespace sqha {

/// Bad input: a value outside its documented domain. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation that cannot proceed (stability bound, non-finite state,
/// bracket failure). Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sqha
