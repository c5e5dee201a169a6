#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace logcoral {

// Base of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arguments violate a documented precondition (shape, range, finiteness).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// An iterative routine failed, or a computed value became NaN/Inf.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, std::size_t iterations = 0)
      : Error(what), iterations_(iterations) {}

  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

// Matrix logarithm requested on a matrix with a non-positive eigenvalue.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(const std::string& what, double eigenvalue)
      : Error(what), eigenvalue_(eigenvalue) {}

  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double eigenvalue_;
};

// Malformed external input. line() is 1-based; 0 when not line-specific.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace logcoral
