#include <gtest/gtest.h>

#include "rcwave/network.hpp"
#include "rcwave/spef.hpp"
#include "test_support.hpp"

using namespace rcwave;
using rcwave::test::code_of;

namespace {

const char* kMinimal =
    "*D_NET net 1.0\n"
    "*CONN\n"
    "*I drv O\n"
    "*CAP\n"
    "1 net:0 1.0\n"
    "*RES\n"
    "1 drv net:0 1.0\n"
    "*END\n";

spef::ValueRanges ladder5_ranges() {
  spef::ValueRanges r;
  r.cap_ff = {21.3035, 21.3035};
  r.res_segment_ohm = {5.32588, 5.32588};
  r.res_end_ohm = {145.5, 145.5};
  return r;
}

}  // namespace

TEST(SpefParse, Ladder5) {
  const auto nets = spef::parse_spef(rcwave::test::ladder5_text());
  ASSERT_EQ(nets.size(), 1u);
  const auto& n = nets[0];
  EXPECT_EQ(n.name, "net_0");
  EXPECT_DOUBLE_EQ(n.total_cap_ff, 106.518);
  ASSERT_EQ(n.caps.size(), 5u);
  for (const auto& c : n.caps) EXPECT_DOUBLE_EQ(c.value_ff, 21.3035);
  ASSERT_EQ(n.ress.size(), 6u);
  EXPECT_DOUBLE_EQ(n.ress.front().value_ohm, 145.5);
  EXPECT_DOUBLE_EQ(n.ress.back().value_ohm, 145.5);
  for (std::size_t k = 1; k + 1 < n.ress.size(); ++k) EXPECT_DOUBLE_EQ(n.ress[k].value_ohm, 5.32588);
  EXPECT_EQ(n.driver_pin(), "I1:Y");
  EXPECT_EQ(n.receiver_pin(), "I2:A");
}

TEST(SpefParse, MinimalNet) {
  const auto nets = spef::parse_spef(kMinimal);
  ASSERT_EQ(nets.size(), 1u);
  EXPECT_EQ(nets[0].caps.size(), 1u);
  EXPECT_EQ(nets[0].ress.size(), 1u);
}

TEST(SpefParse, DanglingNode) {
  std::string text = rcwave::test::ladder5_text();
  text.replace(text.find("2 net_0:0 net_0:1"), 17, "2 net_0:0 net_0:9");
  EXPECT_EQ(code_of([&] { spef::parse_spef(text); }), ErrorCode::DanglingNode);
}

TEST(SpefParse, RejectsNonPositiveValues) {
  std::string text = kMinimal;
  text.replace(text.find("1 net:0 1.0"), 11, "1 net:0 0.0");
  EXPECT_EQ(code_of([&] { spef::parse_spef(text); }), ErrorCode::NonPositiveValue);
  text = kMinimal;
  text.replace(text.find("1 drv net:0 1.0"), 15, "1 drv net:0 -2");
  EXPECT_EQ(code_of([&] { spef::parse_spef(text); }), ErrorCode::NonPositiveValue);
}

TEST(SpefParse, MissingHeaderCarriesLine) {
  const std::string text = "*CONN\n*I drv O\n";
  try {
    spef::parse_spef(text);
    FAIL() << "expected MalformedSection";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedSection);
    EXPECT_EQ(e.line(), 1);
  }
}

TEST(SpefParse, SectionOrderEnforced) {
  const std::string text = "*D_NET n 1\n*CAP\n1 n:0 1\n*CONN\n*RES\n*END\n";
  EXPECT_EQ(code_of([&] { spef::parse_spef(text); }), ErrorCode::MalformedSection);
  EXPECT_EQ(code_of([&] { spef::parse_spef("*D_NET n 1\n*CONN\n*CAP\n*RES\n"); }),
            ErrorCode::MalformedSection);
}

TEST(SpefParse, IndicesMustBeConsecutive) {
  std::string text = kMinimal;
  text.replace(text.find("1 net:0 1.0"), 1, "2");
  EXPECT_EQ(code_of([&] { spef::parse_spef(text); }), ErrorCode::MalformedSection);
}

TEST(SpefParse, SeveralNets) {
  const std::string text = std::string(kMinimal) + "\n" + rcwave::test::ladder5_text();
  const auto nets = spef::parse_spef(text);
  ASSERT_EQ(nets.size(), 2u);
  EXPECT_EQ(nets[1].name, "net_0");
}

TEST(SpefEmit, Ladder5RoundTrip) {
  const auto nets = spef::parse_spef(rcwave::test::ladder5_text());
  EXPECT_EQ(spef::parse_spef(spef::emit_spef(nets[0]))[0], nets[0]);
  EXPECT_EQ(spef::emit_spef(nets[0]), rcwave::test::ladder5_text());
}

TEST(SpefEmit, MinimalIsEightLines) {
  const auto text = spef::emit_spef(spef::parse_spef(kMinimal)[0]);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 8);
}

TEST(SpefEmit, SixSignificantDigits) {
  EXPECT_DOUBLE_EQ(spef::round_sig6(21.30354999), 21.3035);
  EXPECT_DOUBLE_EQ(spef::round_sig6(1234567.0), 1234570.0);
}

TEST(SpefEmit, RandomNetsRoundTrip) {
  for (int i = 0; i < 100; ++i) {
    const auto net = spef::generate_spef(1 + i % 30, 1000 + i, {}, "n" + std::to_string(i));
    const auto back = spef::parse_spef(spef::emit_spef(net));
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0], net) << "net " << i;
  }
}

TEST(SpefGenerate, Ladder5Shape) {
  const auto net = spef::generate_spef(5, 3, ladder5_ranges(), "net_0");
  const auto ladder5 = spef::parse_spef(rcwave::test::ladder5_text())[0];
  EXPECT_EQ(net.name, ladder5.name);
  EXPECT_EQ(net.connections, ladder5.connections);
  EXPECT_EQ(net.caps, ladder5.caps);
  EXPECT_EQ(net.ress, ladder5.ress);
  EXPECT_NEAR(net.total_cap_ff, ladder5.total_cap_ff, 2e-3);  // six-digit rounding of different sums
}

TEST(SpefGenerate, OrderOne) {
  const auto net = spef::generate_spef(1, 9, {});
  EXPECT_EQ(net.caps.size(), 1u);
  EXPECT_EQ(net.ress.size(), 2u);
  EXPECT_NO_THROW(spef::validate(net));
}

TEST(SpefGenerate, Deterministic) {
  const auto a = spef::emit_spef(spef::generate_spef(12, 77, {}));
  EXPECT_EQ(a, spef::emit_spef(spef::generate_spef(12, 77, {})));
  EXPECT_NE(a, spef::emit_spef(spef::generate_spef(12, 78, {})));
}

TEST(SpefGenerate, ValuesInsideRanges) {
  const spef::ValueRanges r;
  const auto net = spef::generate_spef(20, 5, r);
  for (const auto& c : net.caps) {
    EXPECT_GE(c.value_ff, r.cap_ff.min);
    EXPECT_LE(c.value_ff, r.cap_ff.max);
  }
  for (std::size_t k = 1; k + 1 < net.ress.size(); ++k) {
    EXPECT_GE(net.ress[k].value_ohm, r.res_segment_ohm.min);
    EXPECT_LE(net.ress[k].value_ohm, r.res_segment_ohm.max);
  }
}

TEST(SpefGeneratorConfig, ParsesKeys) {
  const auto cfg = spef::parse_generator_config(
      "# ranges\ncap_min = 1\ncap_max = 2\nres_min=3\nres_max=4\nend_res_min = 5\n"
      "end_res_max = 6\norder = 7\nseed = 8\n");
  EXPECT_DOUBLE_EQ(cfg.ranges.cap_ff.max, 2.0);
  EXPECT_DOUBLE_EQ(cfg.ranges.res_end_ohm.min, 5.0);
  EXPECT_EQ(cfg.order, 7);
  EXPECT_EQ(cfg.seed, 8u);
  EXPECT_EQ(code_of([] { spef::parse_generator_config("bogus = 1\n"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { spef::parse_generator_config("cap_min = 3\ncap_max = 2\n"); }),
            ErrorCode::InvalidArgument);
}

TEST(SpefNetwork, Ladder5) {
  const auto spef_net = spef::parse_spef(rcwave::test::ladder5_text())[0];
  const RcNetwork net = to_network(spef_net, "I1:Y", "I2:A");
  int grounded = 0;
  for (const auto& c : net.caps_to_ground)
    if (c.c > 0) {
      ++grounded;
      EXPECT_NEAR(c.c, 21.3035e-15, 1e-27);
    }
  EXPECT_EQ(grounded, 5);
  EXPECT_EQ(net.conductances.size(), 6u);
  EXPECT_TRUE(std::is_sorted(net.node_ids.begin(), net.node_ids.end()));
  EXPECT_EQ(net.node_ids[net.driver_node], "I1:Y");
  EXPECT_EQ(net.node_ids[net.output_node], "I2:A");
}

TEST(SpefNetwork, UnitConversion) {
  const RcNetwork net = to_network(spef::parse_spef(kMinimal)[0], "drv", "net:0");
  ASSERT_EQ(net.conductances.size(), 1u);
  EXPECT_DOUBLE_EQ(net.conductances[0].g, 1.0);
  EXPECT_DOUBLE_EQ(net.caps_to_ground[net.index_of("net:0")].c, 1e-15);
}

TEST(SpefNetwork, DisconnectedOutput) {
  const std::string text =
      "*D_NET n 2\n*CONN\n*I a O\n*I b I\n*CAP\n1 n:0 1\n2 n:1 1\n*RES\n"
      "1 a n:0 1\n2 n:1 b 1\n*END\n";
  const auto net = spef::parse_spef(text)[0];
  EXPECT_EQ(code_of([&] { to_network(net, "a", "b"); }), ErrorCode::DisconnectedOutput);
}

TEST(SpefNetwork, DefaultPinsFromDirections) {
  const RcNetwork net = to_network(spef::parse_spef(rcwave::test::ladder5_text())[0]);
  EXPECT_EQ(net.node_ids[net.driver_node], "I1:Y");
  EXPECT_EQ(net.node_ids[net.output_node], "I2:A");
}
