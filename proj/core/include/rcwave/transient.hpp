#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rcwave/circuit.hpp"
#include "rcwave/network.hpp"
#include "rcwave/transfer_function.hpp"

namespace rcwave {

enum class WaveKind { Input, Output, Correction };

std::string_view to_string(WaveKind kind);

/// Uniformly sampled signal on [0, t_span]: sample k sits at k*t_span/(n-1).
struct Waveform {
  std::vector<double> samples;
  double t_span = 0.0;
  WaveKind kind = WaveKind::Output;

  int size() const { return static_cast<int>(samples.size()); }
  double time_at(int k) const { return k * t_span / (size() - 1); }

  bool operator==(const Waveform&) const = default;
};

std::string to_json(const Waveform& w, int indent = -1);
Waveform waveform_from_json(std::string_view text);

enum class StimKind { Step, SaturatedRamp };

/// Driver-side voltage: a 0 -> amplitude step at t = 0, or a linear rise
/// over `rise_time` that then holds at `amplitude`.
struct Stimulus {
  StimKind kind = StimKind::Step;
  double rise_time = 0.0;
  double amplitude = 1.0;

  static Stimulus step(double amplitude = 1.0) { return {StimKind::Step, 0.0, amplitude}; }
  static Stimulus ramp(double rise_time, double amplitude = 1.0) {
    return {StimKind::SaturatedRamp, rise_time, amplitude};
  }

  /// Value just after t (the step is already high at t = 0).
  double value(double t) const;
};

/// Parses "step" or "ramp:<rise seconds>".
Stimulus parse_stimulus(std::string_view spec);

/// Rejects negative rise times, non-positive spans, and ramps that do not
/// finish inside the window.
void validate(const Stimulus& stim, double t_span, int n);

/// The stimulus on the sample grid. The step shows its pre-switch level at
/// t = 0 so the edge is visible.
Waveform sample_stimulus(const Stimulus& stim, double t_span, int n);

/// 7 x the slowest time constant unless another factor is given.
double default_t_span(const TransferFunction& tf, double factor = 7.0);

/// Closed-form response of one pole term.
Waveform term_response(const PoleTerm& term, const Stimulus& stim, double t_span, int n);

/// Sum of term_response over tf.terms, in order.
Waveform analytic_response(const TransferFunction& tf, const Stimulus& stim, double t_span, int n);

/// Trapezoidal integration of the nodal equations with `substeps` steps per
/// output interval. Throws SingularStep if the step matrix cannot be factored.
Waveform numerical_response(const NodalSystem& sys, const Stimulus& stim, double t_span, int n,
                            int substeps);
Waveform numerical_response(const RcNetwork& net, const Stimulus& stim, double t_span, int n,
                            int substeps);

double max_abs_diff(const Waveform& a, const Waveform& b);
double rmse(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace rcwave
