#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rcwave/features.hpp"
#include "rcwave/random.hpp"
#include "rcwave/spef.hpp"

namespace rcwave {

/// Stimulus recipe relative to a record's window. "slow" and "fast" draw a
/// rise time as a fraction of t_span; "ramp:<seconds>" is absolute.
struct StimRecipe {
  enum Kind { Step, Slow, Fast, Absolute } kind = Step;
  double rise_s = 0.0;

  bool operator==(const StimRecipe&) const = default;
};

inline constexpr double kSlowRiseMin = 0.15;
inline constexpr double kSlowRiseMax = 0.5;
inline constexpr double kFastRiseMin = 0.01;
inline constexpr double kFastRiseMax = 0.06;

/// "step", "slow", "fast" or "ramp:<seconds>".
StimRecipe parse_stim_recipe(std::string_view text);
/// Comma-separated list of recipes.
std::vector<StimRecipe> parse_stim_list(std::string_view text);
std::string to_string(const StimRecipe& recipe);

Stimulus realize(const StimRecipe& recipe, double t_span, Rng& rng);

/// Net i of a seeded family: its order is drawn from [order_min, order_max]
/// and its SPEF seed is derived from (seed, i).
struct NetDraw {
  int order = 0;
  std::uint64_t spef_seed = 0;
};
NetDraw draw_net(std::uint64_t seed, int index, int order_min, int order_max);

struct CorpusConfig {
  int n_nets = 100;
  int order_min = 2;
  int order_max = 15;
  int records_per_net = 1;
  /// Record j of a net uses recipes[j % size].
  std::vector<StimRecipe> recipes{{StimRecipe::Step}, {StimRecipe::Slow}, {StimRecipe::Fast}};
  std::uint64_t seed = 0;
  spef::ValueRanges ranges;
  features::DatasetConfig data;
  /// Start the recipe cycle at the net index so that one record per net
  /// still covers every recipe across the corpus.
  bool rotate_recipes = true;
};

/// Records for a single network. t_norm is computed with `stats`.
std::vector<features::FeatureRecord> records_for_net(const RcNetwork& net, int net_index,
                                                     const CorpusConfig& cfg,
                                                     const features::NormStats& stats,
                                                     int first_id);

/// Generated ladders turned into records, ordered by (net, record). t_norm
/// is normalized with statistics over the whole corpus. Deterministic for
/// any thread count.
std::vector<features::FeatureRecord> synthesize_corpus(const CorpusConfig& cfg, int threads = 1);

}  // namespace rcwave
