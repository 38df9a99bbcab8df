#pragma once

#include <filesystem>
#include <string>

#include "rcwave/nn/train.hpp"

namespace rcwave::nn {

/// JSON checkpoint: format tag and version, ModelConfig, NormStats, split
/// seed, the parameter layout ([name, rows, cols] in storage order) and the
/// flat "base" and "correction" arrays.
std::string checkpoint_to_json(const TrainedModel& model);
TrainedModel checkpoint_from_json(const std::string& text);

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

std::string config_to_json(const ModelConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig config_from_json(const std::string& text);

std::string report_to_json(const TrainReport& report);

}  // namespace rcwave::nn
