#include "rcwave/network.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "rcwave/error.hpp"

namespace rcwave {

int RcNetwork::index_of(const std::string& name) const {
  auto it = std::lower_bound(node_ids.begin(), node_ids.end(), name);
  if (it == node_ids.end() || *it != name) return -1;
  return static_cast<int>(it - node_ids.begin());
}

RcNetwork to_network(const spef::SpefNet& net, const std::string& driver_pin,
                     const std::string& output_pin) {
  spef::validate(net);

  std::set<std::string> names;
  for (const auto& c : net.connections) names.insert(c.pin);
  for (const auto& c : net.caps) names.insert(c.node);
  for (const auto& r : net.ress) {
    names.insert(r.node_a);
    names.insert(r.node_b);
  }

  RcNetwork out;
  out.node_ids.assign(names.begin(), names.end());
  out.driver_node = out.index_of(driver_pin);
  out.output_node = out.index_of(output_pin);
  if (out.driver_node < 0)
    throw Error(ErrorCode::InvalidArgument, "unknown driver pin '" + driver_pin + "'");
  if (out.output_node < 0)
    throw Error(ErrorCode::InvalidArgument, "unknown output pin '" + output_pin + "'");
  if (out.driver_node == out.output_node)
    throw Error(ErrorCode::InvalidArgument, "driver and output must differ");

  std::vector<double> cap(out.node_ids.size(), 0.0);
  for (const auto& c : net.caps) cap[out.index_of(c.node)] += c.value_ff * kFemto;
  for (std::size_t i = 0; i < cap.size(); ++i)
    out.caps_to_ground.push_back({static_cast<int>(i), cap[i]});

  std::vector<std::vector<int>> adj(out.node_ids.size());
  for (const auto& r : net.ress) {
    const int a = out.index_of(r.node_a);
    const int b = out.index_of(r.node_b);
    if (a == b) continue;  // self-loop carries no current
    out.conductances.push_back({a, b, 1.0 / r.value_ohm});
    adj[a].push_back(b);
    adj[b].push_back(a);
  }

  std::vector<char> seen(out.node_ids.size(), 0);
  std::queue<int> frontier;
  frontier.push(out.driver_node);
  seen[out.driver_node] = 1;
  while (!frontier.empty()) {
    const int n = frontier.front();
    frontier.pop();
    for (int m : adj[n])
      if (!seen[m]) {
        seen[m] = 1;
        frontier.push(m);
      }
  }
  if (!seen[out.output_node])
    throw Error(ErrorCode::DisconnectedOutput,
                "no resistive path from '" + driver_pin + "' to '" + output_pin + "'");
  return out;
}

RcNetwork to_network(const spef::SpefNet& net) {
  const auto drv = net.driver_pin();
  const auto rcv = net.receiver_pin();
  if (drv.empty() || rcv.empty())
    throw Error(ErrorCode::InvalidArgument,
                "net " + net.name + " needs one 'O' and one 'I' connection to pick pins");
  return to_network(net, drv, rcv);
}

}  // namespace rcwave
