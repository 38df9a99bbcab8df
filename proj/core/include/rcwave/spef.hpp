#pragma once

// Reader/writer for the reduced SPEF dialect produced by parasitic
// extraction of a single point-to-point signal net:
//
//   *D_NET <name> <total cap>
//   *CONN
//   *I <pin> <I|O>
//   *CAP
//   <idx> <node> <value>
//   *RES
//   <idx> <node a> <node b> <value>
//   *END
//
// Capacitances are femtofarads and resistances ohms. Coupling caps, *PORT
// entries and name maps are not part of the dialect.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rcwave::spef {

struct Connection {
  std::string pin;
  char direction = 'I';  // 'I' or 'O'

  bool operator==(const Connection&) const = default;
};

struct Capacitor {
  int index = 0;
  std::string node;
  double value_ff = 0.0;

  bool operator==(const Capacitor&) const = default;
};

struct Resistor {
  int index = 0;
  std::string node_a;
  std::string node_b;
  double value_ohm = 0.0;

  bool operator==(const Resistor&) const = default;
};

struct SpefNet {
  std::string name;
  double total_cap_ff = 0.0;
  std::vector<Connection> connections;
  std::vector<Capacitor> caps;
  std::vector<Resistor> ress;

  bool operator==(const SpefNet&) const = default;

  /// First connection with direction 'O' (the driving cell pin), or empty.
  std::string driver_pin() const;
  /// First connection with direction 'I' (the receiving cell pin), or empty.
  std::string receiver_pin() const;
};

/// Parses every *D_NET block in `text`. Throws rcwave::Error with
/// MalformedSection, DanglingNode or NonPositiveValue; errors carry the
/// 1-based line number of the offending line.
std::vector<SpefNet> parse_spef(std::string_view text);

/// Checks the structural invariants of a net (positive values, consecutive
/// indices, no dangling resistor ends). Throws like parse_spef.
void validate(const SpefNet& net);

/// Writes a net in the dialect above. Reals use 6 significant digits.
std::string emit_spef(const SpefNet& net);
std::string emit_spef(const std::vector<SpefNet>& nets);

/// Rounds to the precision emit_spef writes, so generated values survive
/// a text round trip unchanged.
double round_sig6(double value);

struct Range {
  double min = 0.0;
  double max = 0.0;
};

/// Value ranges for synthetic ladders. Defaults bracket the magnitudes of
/// extracted 40nm-class nets (tens of fF per node, a few ohms per segment,
/// ~100 ohm pin resistances).
struct ValueRanges {
  Range cap_ff{10.0, 40.0};
  Range res_segment_ohm{2.0, 20.0};
  Range res_end_ohm{50.0, 200.0};
};

/// Parses a flat `key = value` file (ranges plus optional order/seed).
/// Recognized keys: cap_min, cap_max, res_min, res_max, end_res_min,
/// end_res_max, order, seed. Lines starting with '#' are comments.
struct GeneratorConfig {
  ValueRanges ranges;
  int order = 5;
  std::uint64_t seed = 0;
};
GeneratorConfig parse_generator_config(std::string_view text);

/// Deterministic ladder net: driver pin -> `order` capacitive nodes in a
/// chain -> receiver pin, with end resistors on both pins.
SpefNet generate_spef(int order, std::uint64_t seed, const ValueRanges& ranges,
                      const std::string& name = "net_0");

}  // namespace rcwave::spef
