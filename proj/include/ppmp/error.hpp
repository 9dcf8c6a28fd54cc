#pragma once

#include <stdexcept>
#include <string>

namespace ppmp {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user input: bad configuration, violated precondition, malformed file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed artifact file. Message carries line/field context.
class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Numerical failure at runtime: singular/ill-conditioned matrices, NaN state,
// non-converged solvers.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ppmp
