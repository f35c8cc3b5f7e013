#pragma once

#include <stdexcept>
#include <string>

namespace bmi {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or schema-violating input document.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Inconsistent or unsupported configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Query outside the supported domain (field angle, depth, pixel).
class OutOfRangeError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace bmi
