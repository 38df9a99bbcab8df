#include "rcwave/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rcwave/circuit.hpp"
#include "rcwave/error.hpp"

namespace rcwave::features {

NormStats fit_norm_stats(std::span<const double> t_spans) {
  if (t_spans.empty()) throw Error(ErrorCode::InvalidArgument, "no transient times to fit");
  double mean = 0.0;
  for (double t : t_spans) {
    if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveTime, "t_span must be positive");
    mean += std::log10(t);
  }
  mean /= static_cast<double>(t_spans.size());
  double var = 0.0;
  for (double t : t_spans) var += (std::log10(t) - mean) * (std::log10(t) - mean);
  var /= static_cast<double>(t_spans.size());
  const double sigma = std::sqrt(var);
  return {mean, sigma > 1e-12 ? sigma : 1.0};
}

Waveform normalize_voltage(const Waveform& w) {
  Waveform out = w;
  if (w.samples.empty()) return out;
  const auto [lo, hi] = std::minmax_element(w.samples.begin(), w.samples.end());
  const double range = *hi - *lo;
  for (auto& v : out.samples) v = range > 0.0 ? (v - *lo) / range : 0.0;
  return out;
}

double normalize_tspan(double t_span, const NormStats& stats) {
  if (!(t_span > 0.0)) throw Error(ErrorCode::NonPositiveTime, "t_span must be positive");
  return (std::log10(t_span) - stats.mu_t) / stats.sigma_t;
}

TripletBlock encode_triplets(const TransferFunction& tf, int n_terms) {
  if (n_terms < 1) throw Error(ErrorCode::InvalidArgument, "n_terms must be >= 1");
  const double scale = tf.max_pole_magnitude();
  struct Row {
    Triplet t;
    double weight;
  };
  std::vector<Row> rows;
  for (const auto& term : tf.terms) {
    for (int j = 1; j <= term.multiplicity; ++j) {
      const double a = term.residues[j - 1];
      rows.push_back({{term.pole / scale, j, a / std::pow(scale, j)},
                      std::abs(a) / std::pow(std::abs(term.pole), j)});
    }
  }
  // Total order so any permutation of the input terms encodes identically.
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.t.pole_norm != b.t.pole_norm) return a.t.pole_norm > b.t.pole_norm;
    if (a.t.order != b.t.order) return a.t.order < b.t.order;
    return a.t.residue_norm < b.t.residue_norm;
  });

  TripletBlock block;
  block.n_active = std::min<int>(n_terms, static_cast<int>(rows.size()));
  block.rows.assign(n_terms, Triplet{});
  for (int k = 0; k < block.n_active; ++k) block.rows[k] = rows[k].t;
  return block;
}

TransferFunction decode_triplets(const TripletBlock& block, double p_max_abs) {
  std::map<double, std::map<int, double>> by_pole;
  for (int k = 0; k < block.n_active; ++k) {
    const auto& r = block.rows[k];
    by_pole[r.pole_norm * p_max_abs][r.order] = r.residue_norm * std::pow(p_max_abs, r.order);
  }
  TransferFunction tf;
  for (auto it = by_pole.rbegin(); it != by_pole.rend(); ++it) {
    PoleTerm term;
    term.pole = it->first;
    term.multiplicity = it->second.rbegin()->first;
    term.residues.assign(term.multiplicity, 0.0);
    for (const auto& [j, a] : it->second) term.residues[j - 1] = a;
    tf.terms.push_back(std::move(term));
  }
  tf.dc_gain = dc_gain_of(tf.terms);
  return tf;
}

int device_for(const Stimulus& stim, double t_span) {
  if (stim.kind == StimKind::Step) return kIdealStep;
  return stim.rise_time >= kSlowRampFraction * t_span ? kSlowRamp : kFastRamp;
}

double record_t_span(const TransferFunction& tf, const DatasetConfig& config) {
  return default_t_span(tf, config.t_span_factor);
}

FeatureRecord build_record(const TransferFunction& tf, const Stimulus& stim,
                           const DatasetConfig& config, const NormStats& stats, int id) {
  const int dom = dominant_term(tf);
  if (dom < 0) throw Error(ErrorCode::InvalidArgument, "transfer function has no terms");
  const double t_span = record_t_span(tf, config);
  const int n = config.n_samples;

  FeatureRecord r;
  r.id = id;
  r.order = tf.order();
  r.device_id = device_for(stim, t_span);
  r.t_span = t_span;
  r.t_norm = normalize_tspan(t_span, stats);
  r.triplets = encode_triplets(tf, config.n_terms);
  r.v_in = normalize_voltage(sample_stimulus(stim, t_span, n));
  r.target = analytic_response(tf, stim, t_span, n);
  r.base_target = term_response(tf.terms[dom], stim, t_span, n);
  r.correction_target = Waveform{std::vector<double>(n), t_span, WaveKind::Correction};
  for (int k = 0; k < n; ++k)
    r.correction_target.samples[k] = r.target.samples[k] - r.base_target.samples[k];
  return r;
}

FeatureRecord build_record(const RcNetwork& net, const Stimulus& stim,
                           const DatasetConfig& config, const NormStats& stats, int id) {
  return build_record(extract_tf(net), stim, config, stats, id);
}

}  // namespace rcwave::features
