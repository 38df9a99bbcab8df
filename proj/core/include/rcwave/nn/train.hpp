#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rcwave/error.hpp"
#include "rcwave/features.hpp"
#include "rcwave/nn/model.hpp"

namespace rcwave::nn {

/// Base network plus additive correction network, with the t_span
/// statistics fitted on the training split.
struct TrainedModel {
  ModelConfig config;
  features::NormStats stats;
  std::uint64_t split_seed = 0;
  double val_fraction = 0.1;
  HybridNet<float> base;
  HybridNet<float> correction;

  TrainedModel() = default;
  explicit TrainedModel(const ModelConfig& cfg);

  /// Predictions in one pass over many records (t_norm is recomputed from
  /// `stats`). Results follow the input order.
  std::vector<std::vector<double>> predict_base(
      const std::vector<const features::FeatureRecord*>& records) const;
  /// Correction output given each record's base prediction.
  std::vector<std::vector<double>> predict_correction(
      const std::vector<const features::FeatureRecord*>& records,
      const std::vector<std::vector<double>>& base) const;

  std::vector<double> forward_base(const features::FeatureRecord& r) const;
  /// forward_base + correction network output.
  std::vector<double> forward_corrected(const features::FeatureRecord& r) const;
};

struct TrainOptions {
  double lr = 1e-3;
  int epochs = 50;
  int batch = 8;
  double clip = 1.0;  // global gradient-norm bound; <= 0 disables
  /// Linear lr ramp over the first optimizer steps of each stage.
  int warmup_steps = 200;
  /// Cosine decay of the lr to zero over the planned steps of a stage.
  bool cosine = true;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;  // split, shuffling and dropout
  /// Stop a stage after this many epochs without a new best validation
  /// RMSE; 0 runs every epoch.
  int patience = 0;
  /// Worker threads; 0 picks thread_count(). Results do not depend on it.
  int threads = 0;
  /// Samples per tape. Fixed so the arithmetic is independent of threads.
  int micro_batch = 8;
  bool train_correction = true;
  /// Called after every epoch with (stage, epoch, train loss, val rmse).
  std::function<void(const std::string&, int, double, double)> on_epoch;
};

struct StageReport {
  std::vector<double> epoch_losses;
  std::vector<double> val_rmse;
  int best_epoch = -1;
  double best_val_rmse = 0.0;
};

struct TrainReport {
  /// Stage-1 epoch losses followed by stage-2 epoch losses.
  std::vector<double> epoch_losses;
  StageReport base;
  StageReport correction;
  /// Final model on the validation split against the full target.
  double val_rmse = 0.0;
  /// Base network alone on the validation split against the full target.
  double base_val_rmse = 0.0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  int n_train = 0;
  int n_val = 0;
};

struct Split {
  std::vector<int> train;
  std::vector<int> val;
};

/// Deterministic shuffle-and-cut of n indices; both halves come back sorted.
/// n >= 2 always keeps at least one validation record.
Split split_indices(int n, double val_fraction, std::uint64_t seed);

/// Raised when a loss turns NaN or infinite; carries the report so far.
class TrainDiverged : public Error {
 public:
  TrainDiverged(const std::string& what, TrainReport report)
      : Error(ErrorCode::DivergenceDetected, what), report_(std::move(report)) {}
  const TrainReport& report() const { return report_; }

 private:
  TrainReport report_;
};

struct TrainResult {
  TrainedModel model;
  TrainReport report;
};

/// Two-stage schedule: the base network learns base_target, then it is
/// frozen and the correction network learns the residual target - base
/// prediction, with that prediction as an extra input channel. Each stage keeps its best
/// validation epoch. `init` continues from existing weights when given.
TrainResult train(const std::vector<features::FeatureRecord>& records, const ModelConfig& cfg,
                  const TrainOptions& opt, const TrainedModel* init = nullptr);

/// Root mean square over all samples of all pairs.
double pooled_rmse(const std::vector<std::vector<double>>& pred,
                   const std::vector<std::vector<double>>& truth);

/// Makes the allocator keep freed blocks instead of returning them to the
/// kernel; large activation buffers otherwise page-fault on every step.
/// Process-wide and idempotent; a no-op off glibc.
void retain_freed_memory();

}  // namespace rcwave::nn
