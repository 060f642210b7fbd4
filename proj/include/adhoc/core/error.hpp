#pragma once

#include <stdexcept>
#include <string>

namespace adhoc {

enum class ErrorKind {
  validation,
  not_found,
  config,
  missing_input,
  degenerate,
  internal,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorKind::validation, message) {}
};

class NotFoundError : public Error {
public:
  explicit NotFoundError(const std::string& message)
      : Error(ErrorKind::not_found, message) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorKind::config, message) {}
};

class MissingInputError : public Error {
public:
  explicit MissingInputError(const std::string& message)
      : Error(ErrorKind::missing_input, message) {}
};

// Raised when a statistic is undefined for the supplied data.
class DegenerateError : public Error {
public:
  explicit DegenerateError(const std::string& message)
      : Error(ErrorKind::degenerate, message) {}
};

// Process exit codes: 0 success, 1 validation failure, 2 missing input,
// 3 internal error.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace adhoc
