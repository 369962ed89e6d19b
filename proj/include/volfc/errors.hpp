#pragma once

#include <stdexcept>
#include <string>

namespace volfc {

/// Base for every error raised by the library. The CLI maps the concrete
/// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: singular systems, divergence, non-finite values (exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace volfc
