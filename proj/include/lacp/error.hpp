#pragma once

#include <stdexcept>
#include <string>

namespace lacp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed CSV input. Carries the 1-based row index of the offending line.
class IngestionError : public Error {
 public:
  IngestionError(const std::string& what, std::size_t row)
      : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// A caller violated a documented precondition (sizes, ranges, shapes).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A transformed score lies outside the codomain of the map being inverted.
class CodomainError : public Error {
 public:
  using Error::Error;
};

/// Bracket expansion for the bisection inverse gave up.
class NoRootError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced during training or gradient evaluation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace lacp
