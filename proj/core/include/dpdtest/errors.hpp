#pragma once

#include <stdexcept>
#include <string>

namespace dpdtest {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller passed inconsistent shapes or options.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must have a given rank does not.
class RankError : public Error {
 public:
  using Error::Error;
};

/// A restriction set that cannot be satisfied.
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

/// Numerical quadrature did not reach the requested tolerance.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double achieved)
      : Error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

/// A generic numerical failure (overflow, lost precision, failed differentiation).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An estimate ran to the boundary of the parameter space.
class BoundaryError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `row` and `column` are 1-based; 0 means not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::string column)
      : Error(what + " (row " + std::to_string(row) + ", column '" + column + "')"),
        row_(row),
        column_(std::move(column)) {}
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

}  // namespace dpdtest
