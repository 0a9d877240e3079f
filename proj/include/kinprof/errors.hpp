#pragma once

#include <stdexcept>
#include <string>

namespace kinprof {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input record. `locator` names the file/line/record.
class ParseError : public Error {
 public:
  ParseError(std::string locator, const std::string& what)
      : Error(locator + ": " + what), locator_(std::move(locator)) {}
  const std::string& locator() const noexcept { return locator_; }

 private:
  std::string locator_;
};

/// Well-formed input that violates a data invariant (non-finite or off-pitch coordinate, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A metric that is not defined for the given input (empty, constant series, ...).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// Numerical failure that should not occur for finite inputs.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace kinprof
