#pragma once

#include <stdexcept>
#include <string>

namespace mfhd {

/// Malformed or unusable input (bad CSV, non-finite values, bad indices).
/// The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Fewer distinct response values than basis functions.
class DegenerateBasisError : public InputError {
 public:
  using InputError::InputError;
};

/// Covariance of the score cannot be inverted even after ridging.
/// The CLI maps this to exit code 3.
class DegenerateTestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfhd
