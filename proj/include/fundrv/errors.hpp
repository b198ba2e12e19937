#pragma once

#include <stdexcept>
#include <string>

namespace fundrv {

// Least-squares problem whose evaluation or Gram matrix lacks full column rank.
class RankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Penalized normal equations not invertible at the requested smoothing level.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, double smallest_viable_lambda)
      : std::runtime_error(what), smallest_viable_lambda_(smallest_viable_lambda) {}

  // NaN when no lambda on the probe ladder gives a nonsingular system.
  double smallest_viable_lambda() const noexcept { return smallest_viable_lambda_; }

 private:
  double smallest_viable_lambda_;
};

// A point-impact column that cannot be separated from the intercept or
// from another impact column (e.g. periodic curves with X(0) == X(1)).
class EstimabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularContrastError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateRegressorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : std::runtime_error(what), row_(row), column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fundrv
