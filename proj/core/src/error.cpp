#include "rcwave/error.hpp"

namespace rcwave {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedSection: return "MalformedSection";
    case ErrorCode::DanglingNode: return "DanglingNode";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::DisconnectedOutput: return "DisconnectedOutput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ComplexPoleDetected: return "ComplexPoleDetected";
    case ErrorCode::PositivePoleDetected: return "PositivePoleDetected";
    case ErrorCode::PoleEvaluation: return "PoleEvaluation";
    case ErrorCode::SingularStep: return "SingularStep";
    case ErrorCode::NonPositiveTime: return "NonPositiveTime";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::GradMismatch: return "GradMismatch";
  }
  return "Unknown";
}

ErrorClass classify(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoFailure:
      return ErrorClass::Io;
    case ErrorCode::SingularSystem:
    case ErrorCode::ComplexPoleDetected:
    case ErrorCode::PositivePoleDetected:
    case ErrorCode::PoleEvaluation:
    case ErrorCode::SingularStep:
    case ErrorCode::DivergenceDetected:
    case ErrorCode::GradMismatch:
      return ErrorClass::Numerical;
    default:
      return ErrorClass::Usage;
  }
}

namespace {
std::string decorate(ErrorCode code, const std::string& what, int line) {
  std::string msg(to_string(code));
  if (line > 0) msg += " (line " + std::to_string(line) + ")";
  msg += ": ";
  msg += what;
  return msg;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& what) : Error(code, what, 0) {}

Error::Error(ErrorCode code, const std::string& what, int line)
    : std::runtime_error(decorate(code, what, line)), code_(code), line_(line) {}

}  // namespace rcwave
