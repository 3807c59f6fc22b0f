#pragma once

#include <stdexcept>

namespace kuq {

// Thrown for malformed or inconsistent user data (files, shapes, labels).
// The CLI maps this to exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown for numerical failures: loss of positive definiteness where it is
// required, solver non-convergence, unbracketed searches. CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments and configuration errors use std::invalid_argument.
// The CLI maps those to exit code 2.

}  // namespace kuq
