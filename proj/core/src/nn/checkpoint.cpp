#include "rcwave/nn/checkpoint.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace rcwave::nn {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "rcwave-checkpoint";
constexpr int kVersion = 1;

json config_json(const ModelConfig& c) {
  return json{{"d_embed", c.d_embed},       {"n_heads", c.n_heads},
              {"n_enc_layers", c.n_enc_layers}, {"n_dec_layers", c.n_dec_layers},
              {"d_ff", c.d_ff},             {"conv_channels", c.conv_channels},
              {"kernel_size", c.kernel_size}, {"hidden", c.hidden},
              {"seq_len", c.seq_len},       {"target_len", c.target_len},
              {"dropout", c.dropout},       {"seed", c.seed},
              {"n_terms", c.n_terms},       {"same_padding", c.same_padding}};
}

ModelConfig config_of(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaMismatch, "model config must be an object");
  ModelConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "d_embed") c.d_embed = v.get<int>();
    else if (key == "n_heads") c.n_heads = v.get<int>();
    else if (key == "n_enc_layers") c.n_enc_layers = v.get<int>();
    else if (key == "n_dec_layers") c.n_dec_layers = v.get<int>();
    else if (key == "d_ff") c.d_ff = v.get<int>();
    else if (key == "conv_channels") c.conv_channels = v.get<int>();
    else if (key == "kernel_size") c.kernel_size = v.get<int>();
    else if (key == "hidden") c.hidden = v.get<int>();
    else if (key == "seq_len") c.seq_len = v.get<int>();
    else if (key == "target_len") c.target_len = v.get<int>();
    else if (key == "dropout") c.dropout = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "n_terms") c.n_terms = v.get<int>();
    else if (key == "same_padding") c.same_padding = v.get<bool>();
    else throw Error(ErrorCode::SchemaMismatch, "unknown model config key '" + key + "'");
  }
  return c;
}

json params_json(const HybridNet<float>& net) {
  json a = json::array();
  for (float v : net.params()) a.push_back(static_cast<double>(v));
  return a;
}

void load_params(HybridNet<float>& net, const json& a, const char* what) {
  if (!a.is_array() || a.size() != net.params().size())
    throw Error(ErrorCode::SchemaMismatch, std::string(what) + " parameter count does not match the config");
  for (std::size_t i = 0; i < a.size(); ++i) net.params()[i] = static_cast<float>(a[i].get<double>());
}

json layout_json(const ParamLayout& layout) {
  json a = json::array();
  for (const auto& s : layout.specs()) a.push_back(json::array({s.name, s.rows, s.cols}));
  return a;
}

json stage_json(const StageReport& s) {
  return json{{"epoch_losses", s.epoch_losses},
              {"val_rmse", s.val_rmse},
              {"best_epoch", s.best_epoch},
              {"best_val_rmse", s.best_val_rmse}};
}

}  // namespace

std::string checkpoint_to_json(const TrainedModel& m) {
  json j{{"format", kFormat},
         {"v", kVersion},
         {"config", config_json(m.config)},
         {"norm_stats", {{"mu_t", m.stats.mu_t}, {"sigma_t", m.stats.sigma_t}}},
         {"split", {{"seed", m.split_seed}, {"val_fraction", m.val_fraction}}},
         {"layout", {{"base", layout_json(m.base.layout())},
                     {"correction", layout_json(m.correction.layout())}}},
         {"base", params_json(m.base)},
         {"correction", params_json(m.correction)}};
  return j.dump();
}

TrainedModel checkpoint_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string()) != kFormat)
      throw Error(ErrorCode::SchemaMismatch, "not an rcwave checkpoint");
    if (j.at("v").get<int>() != kVersion)
      throw Error(ErrorCode::SchemaMismatch, "unsupported checkpoint version");
    TrainedModel m(config_of(j.at("config")));
    m.stats.mu_t = j.at("norm_stats").at("mu_t").get<double>();
    m.stats.sigma_t = j.at("norm_stats").at("sigma_t").get<double>();
    m.split_seed = j.at("split").at("seed").get<std::uint64_t>();
    m.val_fraction = j.at("split").at("val_fraction").get<double>();
    if (j.at("layout").at("base") != layout_json(m.base.layout()) ||
        j.at("layout").at("correction") != layout_json(m.correction.layout()))
      throw Error(ErrorCode::SchemaMismatch, "checkpoint layout does not match its config");
    load_params(m.base, j.at("base"), "base");
    load_params(m.correction, j.at("correction"), "correction");
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << checkpoint_to_json(model);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

std::string config_to_json(const ModelConfig& cfg) { return config_json(cfg).dump(2); }

ModelConfig config_from_json(const std::string& text) {
  try {
    return config_of(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("model config: ") + e.what());
  }
}

std::string report_to_json(const TrainReport& r) {
  json j{{"epoch_losses", r.epoch_losses},
         {"val_rmse", r.val_rmse},
         {"base_val_rmse", r.base_val_rmse},
         {"wall_time_s", r.wall_time_s},
         {"seed", r.seed},
         {"n_train", r.n_train},
         {"n_val", r.n_val},
         {"base", stage_json(r.base)},
         {"correction", stage_json(r.correction)}};
  return j.dump(2);
}

}  // namespace rcwave::nn
