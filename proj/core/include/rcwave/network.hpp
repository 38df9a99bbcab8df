#pragma once

#include <string>
#include <vector>

#include "rcwave/spef.hpp"

namespace rcwave {

/// Lumped RC network in SI units. Node indices refer to `node_ids`.
struct RcNetwork {
  struct Branch {
    int a = 0;
    int b = 0;
    double g = 0.0;  // siemens
  };
  struct GroundCap {
    int node = 0;
    double c = 0.0;  // farads
  };

  std::vector<std::string> node_ids;  // lexicographic
  int driver_node = 0;
  int output_node = 0;
  std::vector<Branch> conductances;
  std::vector<GroundCap> caps_to_ground;  // one entry per node, zero for bare pins

  int size() const { return static_cast<int>(node_ids.size()); }
  int index_of(const std::string& name) const;  // -1 when absent
};

inline constexpr double kFemto = 1e-15;

/// Builds the SI network seen between `driver_pin` and `output_pin`.
/// Throws InvalidArgument when a pin is unknown and DisconnectedOutput when
/// no resistive path joins the two.
RcNetwork to_network(const spef::SpefNet& net, const std::string& driver_pin,
                     const std::string& output_pin);

/// Uses the net's own 'O' connection as driver and 'I' connection as output.
RcNetwork to_network(const spef::SpefNet& net);

}  // namespace rcwave
