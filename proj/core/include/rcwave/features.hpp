#pragma once

#include <span>
#include <string>
#include <vector>

#include "rcwave/network.hpp"
#include "rcwave/transfer_function.hpp"
#include "rcwave/transient.hpp"

namespace rcwave::features {

/// One flattened expansion term A/(s - p)^order in dimensionless form.
struct Triplet {
  double pole_norm = 0.0;     // p / |p_max|
  int order = 0;              // power j of the term; 0 marks padding
  double residue_norm = 0.0;  // A / |p_max|^j

  bool operator==(const Triplet&) const = default;
};

/// Fixed-size triplet table, heaviest terms first, zero-padded.
struct TripletBlock {
  std::vector<Triplet> rows;
  int n_active = 0;

  bool operator==(const TripletBlock&) const = default;
};

/// Z-score statistics of log10(t_span) over a training split.
struct NormStats {
  double mu_t = 0.0;
  double sigma_t = 1.0;

  bool operator==(const NormStats&) const = default;
};

/// Population mean and standard deviation of log10(t_span). A degenerate
/// corpus (one distinct value) keeps sigma_t = 1.
NormStats fit_norm_stats(std::span<const double> t_spans);

/// (V - min) / (max - min); a constant waveform maps to all zeros.
Waveform normalize_voltage(const Waveform& w);

/// (log10(t_span) - mu_t) / sigma_t. Throws NonPositiveTime for t_span <= 0.
double normalize_tspan(double t_span, const NormStats& stats);

/// Flattens every (p_i, j, A_ij), sorts rows by the DC weight
/// |A_ij| / |p_i|^j (descending) and truncates or zero-pads to n_terms rows.
TripletBlock encode_triplets(const TransferFunction& tf, int n_terms);

/// Inverse of encode_triplets for the active rows given the scale |p_max|.
/// Rows sharing a pole are regrouped into one PoleTerm; missing powers
/// below the highest kept one come back as zero residues.
TransferFunction decode_triplets(const TripletBlock& block, double p_max_abs);

/// Categorical driver label.
enum DeviceId : int { kIdealStep = 0, kSlowRamp = 1, kFastRamp = 2 };
inline constexpr int kDeviceCount = 3;
/// Ramps rising over at least this fraction of the window count as slow.
inline constexpr double kSlowRampFraction = 0.1;

int device_for(const Stimulus& stim, double t_span);

struct DatasetConfig {
  int n_samples = 128;
  int n_terms = 8;
  double t_span_factor = 7.0;
};

struct FeatureRecord {
  int id = 0;
  int order = 0;
  int device_id = 0;
  double t_span = 0.0;
  double t_norm = 0.0;
  TripletBlock triplets;
  Waveform v_in;
  Waveform target;
  Waveform base_target;
  Waveform correction_target;

  bool operator==(const FeatureRecord&) const = default;
};

/// Simulation window used for a network: t_span_factor x slowest tau.
double record_t_span(const TransferFunction& tf, const DatasetConfig& config);

/// Full record: target from the complete expansion, base_target from the
/// dominant term alone, correction_target = target - base_target.
FeatureRecord build_record(const TransferFunction& tf, const Stimulus& stim,
                           const DatasetConfig& config, const NormStats& stats, int id = 0);
FeatureRecord build_record(const RcNetwork& net, const Stimulus& stim,
                           const DatasetConfig& config, const NormStats& stats, int id = 0);

}  // namespace rcwave::features
