#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qot {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  NotFaithful,
  MarginalMismatch,
  NotCP,
  NotUnital,
  InvarianceViolated,
  NotReversing,
  NoReversingOperation,
  NotDensity,
  NotAbelian,
  TooLarge,
  NotConverged,
  SqdbViolated,
  WrongShape,
  SolverFailure,
  Schema,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` identifies the failure
/// and `residual()` carries the offending numeric residual when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double residual = 0.0)
      : std::runtime_error(what), kind_(kind), residual_(residual) {}

  ErrorKind kind() const noexcept { return kind_; }
  double residual() const noexcept { return residual_; }

 private:
  ErrorKind kind_;
  double residual_;
};

}  // namespace qot
