#include "rcwave/transient.hpp"

#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>

#include "rcwave/error.hpp"

namespace rcwave {

std::string_view to_string(WaveKind kind) {
  switch (kind) {
    case WaveKind::Input: return "input";
    case WaveKind::Output: return "output";
    case WaveKind::Correction: return "correction";
  }
  return "output";
}

std::string to_json(const Waveform& w, int indent) {
  nlohmann::json j;
  j["t_span"] = w.t_span;
  j["samples"] = w.samples;
  j["kind"] = std::string(to_string(w.kind));
  return j.dump(indent);
}

Waveform waveform_from_json(std::string_view text) {
  Waveform w;
  try {
    const auto j = nlohmann::json::parse(text);
    w.t_span = j.at("t_span").get<double>();
    w.samples = j.at("samples").get<std::vector<double>>();
    const auto kind = j.value("kind", std::string("output"));
    if (kind == "input") w.kind = WaveKind::Input;
    else if (kind == "output") w.kind = WaveKind::Output;
    else if (kind == "correction") w.kind = WaveKind::Correction;
    else throw Error(ErrorCode::SchemaMismatch, "unknown waveform kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("waveform JSON: ") + e.what());
  }
  return w;
}

double Stimulus::value(double t) const {
  if (t < 0.0) return 0.0;
  if (kind == StimKind::Step || t >= rise_time) return amplitude;
  return amplitude * t / rise_time;
}

Stimulus parse_stimulus(std::string_view spec) {
  if (spec == "step") return Stimulus::step();
  if (spec.starts_with("ramp:")) {
    const auto num = spec.substr(5);
    double rise = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), rise);
    if (ec == std::errc{} && ptr == num.data() + num.size() && rise > 0.0)
      return Stimulus::ramp(rise);
  }
  throw Error(ErrorCode::InvalidArgument,
              "stimulus must be 'step' or 'ramp:<rise seconds>', got '" + std::string(spec) + "'");
}

void validate(const Stimulus& stim, double t_span, int n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 samples");
  if (!(t_span > 0.0)) throw Error(ErrorCode::NonPositiveTime, "t_span must be positive");
  if (!(stim.amplitude >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative amplitude");
  if (stim.kind == StimKind::SaturatedRamp) {
    if (!(stim.rise_time > 0.0))
      throw Error(ErrorCode::InvalidArgument, "ramp rise time must be positive");
    if (stim.rise_time > t_span)
      throw Error(ErrorCode::InvalidArgument, "ramp rise time exceeds the simulated span");
  }
}

Waveform sample_stimulus(const Stimulus& stim, double t_span, int n) {
  validate(stim, t_span, n);
  Waveform w{std::vector<double>(n), t_span, WaveKind::Input};
  for (int k = 0; k < n; ++k) w.samples[k] = k == 0 ? 0.0 : stim.value(w.time_at(k));
  return w;
}

double default_t_span(const TransferFunction& tf, double factor) {
  const double slow = tf.min_pole_magnitude();
  if (!(slow > 0.0)) throw Error(ErrorCode::InvalidArgument, "transfer function has no poles");
  return factor / slow;
}

namespace {

// Regularized lower incomplete gamma P(j, x) for integer j >= 1.
double gamma_p(int j, double x) {
  if (x <= 0.0) return 0.0;
  if (x < j + 1.0) {
    // e^-x * sum_{m >= j} x^m / m!
    double term = std::exp(-x);
    for (int m = 1; m <= j; ++m) term *= x / m;
    double sum = 0.0;
    for (int m = j + 1; term > 1e-18 * sum || m <= j + 1; ++m) {
      sum += term;
      term *= x / m;
    }
    return sum;
  }
  // 1 - e^-x * sum_{m < j} x^m / m!
  double term = std::exp(-x);
  double sum = 0.0;
  for (int m = 0; m < j; ++m) {
    sum += term;
    term *= x / (m + 1);
  }
  return 1.0 - sum;
}

// x P(j, x) - j P(j+1, x) = e^-x sum_{m >= j+1} (m - j) x^m / m!
double ramp_kernel(int j, double x) {
  if (x <= 0.0) return 0.0;
  if (x < j + 2.0) {
    double term = std::exp(-x);
    for (int m = 1; m <= j + 1; ++m) term *= x / m;
    double sum = 0.0;
    for (int m = j + 1; term > 1e-18 * sum || m <= j + 1; ++m) {
      sum += (m - j) * term;
      term *= x / (m + 1);
    }
    return sum;
  }
  return x * gamma_p(j, x) - j * gamma_p(j + 1, x);
}

// Step response of 1/(s + q)^j:  q^-j P(j, q t).
double step_unit(int j, double q, double t) { return std::pow(q, -j) * gamma_p(j, q * t); }

// Unit-slope ramp response of 1/(s + q)^j:  q^-(j+1) R_j(q t).
double ramp_unit(int j, double q, double t) {
  return std::pow(q, -(j + 1)) * ramp_kernel(j, q * t);
}

double term_value(const PoleTerm& term, const Stimulus& stim, double t) {
  const double q = -term.pole;
  double v = 0.0;
  for (int j = 1; j <= term.multiplicity; ++j) {
    const double a = term.residues[j - 1];
    if (a == 0.0) continue;
    if (stim.kind == StimKind::Step) {
      v += a * step_unit(j, q, t);
    } else {
      double r = ramp_unit(j, q, t);
      if (t > stim.rise_time) r -= ramp_unit(j, q, t - stim.rise_time);
      v += a * r / stim.rise_time;
    }
  }
  return stim.amplitude * v;
}

}  // namespace

Waveform term_response(const PoleTerm& term, const Stimulus& stim, double t_span, int n) {
  validate(stim, t_span, n);
  if (!(term.pole < 0.0))
    throw Error(ErrorCode::PositivePoleDetected, "pole " + std::to_string(term.pole));
  Waveform w{std::vector<double>(n), t_span, WaveKind::Output};
  for (int k = 0; k < n; ++k) w.samples[k] = term_value(term, stim, w.time_at(k));
  return w;
}

Waveform analytic_response(const TransferFunction& tf, const Stimulus& stim, double t_span, int n) {
  validate(stim, t_span, n);
  Waveform w{std::vector<double>(n, 0.0), t_span, WaveKind::Output};
  for (const auto& term : tf.terms) {
    const auto part = term_response(term, stim, t_span, n);
    for (int k = 0; k < n; ++k) w.samples[k] += part.samples[k];
  }
  return w;
}

Waveform numerical_response(const NodalSystem& sys, const Stimulus& stim, double t_span, int n,
                            int substeps) {
  validate(stim, t_span, n);
  if (substeps < 1) throw Error(ErrorCode::InvalidArgument, "substeps must be >= 1");

  const double h = t_span / ((n - 1) * static_cast<double>(substeps));
  const Eigen::MatrixXd lhs = sys.C / h + 0.5 * sys.G;
  const Eigen::MatrixXd rhs = sys.C / h - 0.5 * sys.G;
  Eigen::LLT<Eigen::MatrixXd> step(lhs);
  if (step.info() != Eigen::Success)
    throw Error(ErrorCode::SingularStep, "trapezoidal step matrix is not positive definite");

  Waveform w{std::vector<double>(n, 0.0), t_span, WaveKind::Output};
  Eigen::VectorXd v = Eigen::VectorXd::Zero(sys.size());
  double u_prev = stim.value(0.0);
  for (int k = 1; k < n; ++k) {
    for (int s = 0; s < substeps; ++s) {
      const double t_next = (static_cast<double>(k - 1) * substeps + s + 1) * h;
      const double u_next = stim.value(t_next);
      v = step.solve(rhs * v + sys.b * (0.5 * (u_prev + u_next)));
      u_prev = u_next;
    }
    w.samples[k] = sys.e_out.dot(v);
  }
  return w;
}

Waveform numerical_response(const RcNetwork& net, const Stimulus& stim, double t_span, int n,
                            int substeps) {
  return numerical_response(assemble_system(net), stim, t_span, n, substeps);
}

double max_abs_diff(const Waveform& a, const Waveform& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "waveform lengths differ");
  double worst = 0.0;
  for (int k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a.samples[k] - b.samples[k]));
  return worst;
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "sequence lengths differ");
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace rcwave
