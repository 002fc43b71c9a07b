#pragma once

#include <stdexcept>
#include <string>

namespace qhm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two operands live on different grids or carry different manifold parameters.
class Mismatch : public Error {
 public:
  using Error::Error;
};

/// An iterative method stopped before meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best) : Error(what), best_(best) {}
  double best_estimate() const { return best_; }

 private:
  double best_;
};

/// Malformed input document; `field()` names the offending key.
class FormatError : public Error {
 public:
  FormatError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace qhm
