#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rcwave {

enum class ErrorCode {
  // input / validation
  MalformedSection,
  DanglingNode,
  NonPositiveValue,
  DisconnectedOutput,
  InvalidArgument,
  ShapeMismatch,
  SchemaMismatch,
  // I/O
  IoFailure,
  // numerical
  SingularSystem,
  ComplexPoleDetected,
  PositivePoleDetected,
  PoleEvaluation,
  SingularStep,
  NonPositiveTime,
  DivergenceDetected,
  GradMismatch,
};

std::string_view to_string(ErrorCode code);

/// Coarse grouping used by the CLI to pick an exit status.
enum class ErrorClass { Usage, Io, Numerical };
ErrorClass classify(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  /// `line` is 1-based; 0 means "no line information".
  Error(ErrorCode code, const std::string& what, int line);

  ErrorCode code() const noexcept { return code_; }
  int line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  int line_ = 0;
};

}  // namespace rcwave
