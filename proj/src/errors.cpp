#include "qot/errors.hpp"

namespace qot {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotFaithful: return "NotFaithful";
    case ErrorKind::MarginalMismatch: return "MarginalMismatch";
    case ErrorKind::NotCP: return "NotCP";
    case ErrorKind::NotUnital: return "NotUnital";
    case ErrorKind::InvarianceViolated: return "InvarianceViolated";
    case ErrorKind::NotReversing: return "NotReversing";
    case ErrorKind::NoReversingOperation: return "NoReversingOperation";
    case ErrorKind::NotDensity: return "NotDensity";
    case ErrorKind::NotAbelian: return "NotAbelian";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::SqdbViolated: return "SqdbViolated";
    case ErrorKind::WrongShape: return "WrongShape";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::Schema: return "Schema";
  }
  return "Unknown";
}

}  // namespace qot
