#pragma once

#include <stdexcept>
#include <string>

namespace adafl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or lengths that do not line up (layer sizes, vector lengths).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A gradient or parameter became NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument value was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Configuration file or override problems.
class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace adafl
