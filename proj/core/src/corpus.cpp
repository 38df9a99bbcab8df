#include "rcwave/corpus.hpp"

#include <charconv>

#include "rcwave/error.hpp"
#include "rcwave/network.hpp"
#include "rcwave/parallel.hpp"

namespace rcwave {

StimRecipe parse_stim_recipe(std::string_view text) {
  if (text == "step") return {StimRecipe::Step, 0.0};
  if (text == "slow") return {StimRecipe::Slow, 0.0};
  if (text == "fast") return {StimRecipe::Fast, 0.0};
  const Stimulus s = parse_stimulus(text);
  if (s.kind == StimKind::Step) return {StimRecipe::Step, 0.0};
  return {StimRecipe::Absolute, s.rise_time};
}

std::vector<StimRecipe> parse_stim_list(std::string_view text) {
  std::vector<StimRecipe> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view item =
        text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (item.empty()) throw Error(ErrorCode::InvalidArgument, "empty stimulus in list");
    out.push_back(parse_stim_recipe(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string to_string(const StimRecipe& r) {
  switch (r.kind) {
    case StimRecipe::Step: return "step";
    case StimRecipe::Slow: return "slow";
    case StimRecipe::Fast: return "fast";
    case StimRecipe::Absolute: {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, r.rise_s);
      return "ramp:" + std::string(buf, end);
    }
  }
  return "step";
}

Stimulus realize(const StimRecipe& r, double t_span, Rng& rng) {
  switch (r.kind) {
    case StimRecipe::Step: return Stimulus::step();
    case StimRecipe::Slow: return Stimulus::ramp(rng.uniform(kSlowRiseMin, kSlowRiseMax) * t_span);
    case StimRecipe::Fast: return Stimulus::ramp(rng.uniform(kFastRiseMin, kFastRiseMax) * t_span);
    case StimRecipe::Absolute: return Stimulus::ramp(r.rise_s);
  }
  return Stimulus::step();
}

NetDraw draw_net(std::uint64_t seed, int index, int order_min, int order_max) {
  if (order_min < 1 || order_max < order_min)
    throw Error(ErrorCode::InvalidArgument, "order range must satisfy 1 <= min <= max");
  const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(index));
  Rng rng(s);
  NetDraw d;
  d.order = static_cast<int>(rng.uniform_int(order_min, order_max));
  d.spef_seed = rng.next();
  return d;
}

std::vector<features::FeatureRecord> records_for_net(const RcNetwork& net, int net_index,
                                                     const CorpusConfig& cfg,
                                                     const features::NormStats& stats,
                                                     int first_id) {
  if (cfg.recipes.empty()) throw Error(ErrorCode::InvalidArgument, "no stimulus recipes");
  const TransferFunction tf = extract_tf(net);
  const double t_span = features::record_t_span(tf, cfg.data);
  Rng rng(mix_seed(cfg.seed ^ 0x57494dULL, static_cast<std::uint64_t>(net_index)));
  std::vector<features::FeatureRecord> out;
  const std::size_t shift = cfg.rotate_recipes ? static_cast<std::size_t>(net_index) : 0;
  for (int j = 0; j < cfg.records_per_net; ++j) {
    const StimRecipe& rec = cfg.recipes[(shift + j) % cfg.recipes.size()];
    out.push_back(features::build_record(tf, realize(rec, t_span, rng), cfg.data, stats,
                                         first_id + j));
  }
  return out;
}

std::vector<features::FeatureRecord> synthesize_corpus(const CorpusConfig& cfg, int threads) {
  if (cfg.n_nets < 0 || cfg.records_per_net < 1)
    throw Error(ErrorCode::InvalidArgument, "corpus needs n_nets >= 0 and records_per_net >= 1");
  std::vector<std::vector<features::FeatureRecord>> per_net(cfg.n_nets);
  parallel_for(static_cast<std::size_t>(cfg.n_nets), threads, [&](std::size_t i) {
    const NetDraw d = draw_net(cfg.seed, static_cast<int>(i), cfg.order_min, cfg.order_max);
    const spef::SpefNet net =
        spef::generate_spef(d.order, d.spef_seed, cfg.ranges, "net_" + std::to_string(i));
    per_net[i] = records_for_net(to_network(net), static_cast<int>(i), cfg, features::NormStats{},
                                 static_cast<int>(i) * cfg.records_per_net);
  });
  std::vector<features::FeatureRecord> all;
  all.reserve(static_cast<std::size_t>(cfg.n_nets) * cfg.records_per_net);
  for (auto& v : per_net)
    for (auto& r : v) all.push_back(std::move(r));
  if (all.empty()) return all;
  std::vector<double> spans;
  for (const auto& r : all) spans.push_back(r.t_span);
  const features::NormStats stats = features::fit_norm_stats(spans);
  for (auto& r : all) r.t_norm = features::normalize_tspan(r.t_span, stats);
  return all;
}

}  // namespace rcwave
