#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rcwave/corpus.hpp"
#include "rcwave/nn/train.hpp"

namespace rcwave::cli {

struct SweepRow {
  int n = 0;
  double val_rmse = 0.0;
  double train_time_s = 0.0;
};

struct SweepOptions {
  std::vector<int> n_list{2, 10, 40, 80};
  /// Records per training run regardless of n; each of the n nets gets
  /// ceil(records / n) stimuli.
  int records = 240;
  int order_min = 2;
  int order_max = 15;
  std::uint64_t seed = 0;
  nn::ModelConfig model;
  nn::TrainOptions train;
  std::function<void(const SweepRow&)> on_row;
};

/// n values must be positive and strictly increasing.
std::vector<int> parse_n_list(const std::string& text);

/// For each n: n fresh ladders, a corpus, a two-stage training run.
std::vector<SweepRow> run_sweep(const SweepOptions& opt);

/// "n,val_rmse,train_time_s" with one row per n.
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Static line chart of validation RMSE against n (axes, ticks, polyline).
std::string sweep_svg(const std::vector<SweepRow>& rows);

}  // namespace rcwave::cli
