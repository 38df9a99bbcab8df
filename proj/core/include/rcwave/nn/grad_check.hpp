#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcwave/nn/model.hpp"

namespace rcwave::nn {

struct GradCheckOptions {
  double eps = 1e-5;  // central-difference step
  double tol = 1e-4;  // bound on the relative error
  int coords = 50;
  std::uint64_t seed = 1;
  /// Only probe the output head, where the loss is quadratic.
  bool head_only = false;
  /// Check the correction-network variant (extra input channel).
  bool extra_channel = false;
};

struct GradCoordinate {
  std::string param;
  int index = 0;  // position inside that parameter, row-major
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCoordinate> coords;
  double max_rel_err = 0.0;
};

/// Small network for gradient checks: d_embed 8, two heads, one encoder
/// and one decoder layer, L = T = 6.
ModelConfig tiny_config();

/// Random parameters and data in double precision, dropout off; compares
/// backprop against central differences on randomly chosen coordinates.
/// Relative error is |a - n| / max(|a|, |n|, 1e-6). Throws InvalidArgument
/// for eps <= 0 and GradMismatch (naming the coordinates) above tol.
GradCheckReport grad_check(const ModelConfig& cfg, const GradCheckOptions& opt = {});

}  // namespace rcwave::nn
