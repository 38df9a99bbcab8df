#include <gtest/gtest.h>

#include <set>

#include "rcwave/corpus.hpp"
#include "rcwave/parallel.hpp"
#include "test_support.hpp"

using namespace rcwave;
using rcwave::test::code_of;

TEST(StimRecipe, ParseList) {
  const auto v = parse_stim_list("step,slow,fast,ramp:1e-10");
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v[0].kind, StimRecipe::Step);
  EXPECT_EQ(v[1].kind, StimRecipe::Slow);
  EXPECT_EQ(v[2].kind, StimRecipe::Fast);
  EXPECT_EQ(v[3].kind, StimRecipe::Absolute);
  EXPECT_DOUBLE_EQ(v[3].rise_s, 1e-10);
  EXPECT_EQ(parse_stim_recipe(to_string(v[3])), v[3]);
  EXPECT_EQ(code_of([] { parse_stim_list("step,,fast"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { parse_stim_list("square"); }), ErrorCode::InvalidArgument);
}

TEST(StimRecipe, RealizedRampsMatchDevices) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Stimulus slow = realize({StimRecipe::Slow}, 1.0, rng);
    const Stimulus fast = realize({StimRecipe::Fast}, 1.0, rng);
    EXPECT_EQ(features::device_for(slow, 1.0), features::kSlowRamp);
    EXPECT_EQ(features::device_for(fast, 1.0), features::kFastRamp);
    EXPECT_LE(slow.rise_time, 1.0);
  }
}

TEST(DrawNet, RangeAndDeterminism) {
  std::set<int> orders;
  for (int i = 0; i < 300; ++i) {
    const NetDraw d = draw_net(9, i, 2, 15);
    EXPECT_GE(d.order, 2);
    EXPECT_LE(d.order, 15);
    orders.insert(d.order);
    const NetDraw e = draw_net(9, i, 2, 15);
    EXPECT_EQ(d.order, e.order);
    EXPECT_EQ(d.spef_seed, e.spef_seed);
  }
  EXPECT_EQ(orders.size(), 14u);
  EXPECT_EQ(code_of([] { draw_net(0, 0, 10, 2); }), ErrorCode::InvalidArgument);
}

TEST(Corpus, CountsIdsAndDevices) {
  CorpusConfig cfg;
  cfg.n_nets = 10;
  cfg.records_per_net = 4;
  cfg.seed = 3;
  const auto recs = synthesize_corpus(cfg);
  ASSERT_EQ(recs.size(), 40u);
  std::set<int> devices;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].id, static_cast<int>(i));
    devices.insert(recs[i].device_id);
  }
  EXPECT_EQ(devices.size(), 3u);
}

TEST(Corpus, OneRecordPerNetStillCoversRecipes) {
  CorpusConfig cfg;
  cfg.n_nets = 6;
  std::set<int> devices;
  for (const auto& r : synthesize_corpus(cfg)) devices.insert(r.device_id);
  EXPECT_EQ(devices.size(), 3u);
}

TEST(Corpus, TnormStandardizedOverCorpus) {
  CorpusConfig cfg;
  cfg.n_nets = 40;
  cfg.seed = 12;
  const auto recs = synthesize_corpus(cfg);
  double mean = 0.0;
  for (const auto& r : recs) mean += r.t_norm;
  EXPECT_NEAR(mean / recs.size(), 0.0, 1e-9);
}

TEST(Corpus, ThreadCountDoesNotChangeRecords) {
  CorpusConfig cfg;
  cfg.n_nets = 12;
  cfg.records_per_net = 2;
  cfg.seed = 77;
  EXPECT_EQ(synthesize_corpus(cfg, 1), synthesize_corpus(cfg, 4));
}

TEST(Corpus, Empty) {
  CorpusConfig cfg;
  cfg.n_nets = 0;
  EXPECT_TRUE(synthesize_corpus(cfg).empty());
}

TEST(Parallel, RunsEveryIndexAndRethrows) {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw Error(ErrorCode::InvalidArgument, "boom");
                            }),
               Error);
}
