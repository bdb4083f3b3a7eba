#pragma once

#include <stdexcept>
#include <string>

namespace covtest {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or insufficient input: dimension mismatches, n < 2, invalid block
/// partitions, malformed CSV. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A column with fewer than two distinct values where a correlation is needed.
class DegenerateColumnError : public InputError {
 public:
  DegenerateColumnError(std::size_t column, const std::string& what)
      : InputError(what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Cholesky mapping applied to a matrix that is not positive definite.
class NotPositiveDefiniteError : public InputError {
 public:
  NotPositiveDefiniteError(double smallest_pivot, const std::string& what)
      : InputError(what), smallest_pivot_(smallest_pivot) {}
  double smallest_pivot() const noexcept { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

/// The cosine or statistic is undefined (a zero image vector). Exit code 3.
class DegenerateStatisticError : public Error {
 public:
  using Error::Error;
};

/// Invariant broken inside the library; indicates a bug. Exit code 4.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace covtest
