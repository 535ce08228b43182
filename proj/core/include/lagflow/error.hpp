#pragma once

#include <stdexcept>
#include <string>

namespace lagflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Problem exceeds the exact solver's support cap; use the entropic solver.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// The requested scheme is not defined for the field's integrability regime.
class UnsupportedRegime : public Error {
 public:
  using Error::Error;
};

/// The field has no Lipschitz bound, so classical integration was refused.
class RoughFieldError : public Error {
 public:
  using Error::Error;
};

/// Mesh construction failed (degenerate cells, duplicate sites, ...).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// A density-mode representative was requested for a cell of zero mass.
class EmptyCellError : public Error {
 public:
  explicit EmptyCellError(int cell)
      : Error("cell " + std::to_string(cell) + " carries zero mass"), cell_(cell) {}
  int cell() const noexcept { return cell_; }

 private:
  int cell_;
};

/// An iterative solver stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double violation)
      : Error(what), violation_(violation) {}
  double violation() const noexcept { return violation_; }

 private:
  double violation_;
};

/// File could not be read or written, or its contents are malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lagflow
