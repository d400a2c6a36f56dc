#pragma once

#include <stdexcept>
#include <string>

namespace fracucp {

/// Argument outside the mathematical domain of an operation (e.g. a fractional
/// order outside (0,2), a point outside the open cube).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Mismatched lengths or dimensions between inputs.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative procedure exhausted its budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition (ellipticity, support, ...) does not hold.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear solve failure; carries a conditioning diagnostic in the message.
class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration. `path()` is a JSON-pointer-like location.
class SchemaError : public std::invalid_argument {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace fracucp
