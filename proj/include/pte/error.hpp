#pragma once

#include <stdexcept>
#include <string>

namespace pte {

/// Root of every error the engine raises. The CLI maps each subclass onto a
/// process exit code (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed caller input: wrong dimensions, non-finite values, bad files.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A broken internal invariant. Never expected in a correct build.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration or missing credentials.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Response body that does not follow the expected schema.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A generation backend failed after its retry budget was spent.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, std::string endpoint = {}, int status = 0)
      : Error(what), endpoint_(std::move(endpoint)), status_(status) {}

  const std::string& endpoint() const noexcept { return endpoint_; }
  /// HTTP status of the last attempt, 0 when no response arrived.
  int status() const noexcept { return status_; }

 private:
  std::string endpoint_;
  int status_;
};

}  // namespace pte
