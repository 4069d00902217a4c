#pragma once

// Scenario builders shared by the deployment tests and the acceptance binary.

#include <string>

#include "fieldnet/scenario.hpp"

namespace fixtures {

using namespace fieldnet;

// Four soil nodes, 250 wakes each: exactly 1000 packets. Loss on the long
// hop and the uplink, nothing on the short hop.
inline Scenario exactly_once(double loss, std::uint64_t seed) {
  Scenario sc;
  sc.seed = seed;
  sc.fence = default_fence();
  sc.duration = 250 * 305;
  sc.weather.storms.clear();
  for (int i = 0; i < 4; ++i)
    sc.nodes.push_back(soil_node_spec("soil-" + std::to_string(i + 1), env::offset_meters(sc.fence[0], 50.0 + 60 * i, 80)));
  sc.long_link.loss_prob = loss;
  sc.uplink.loss_prob = loss;
  sc.relay.capacity = 5000;
  sc.timing.drain_limit = 30 * kDay;
  return sc;
}

// The paper-default soil node on one pack without solar.
inline Scenario single_pack(double days = 9) {
  Scenario sc;
  sc.seed = 1;
  sc.fence = default_fence();
  sc.duration = days * kDay;
  sc.nodes.push_back(soil_node_spec("soil-1", env::offset_meters(sc.fence[0], 100, 100), 1, 0.0));
  return sc;
}

// Default deployment shortened, with a radio hang on soil-2.
inline Scenario radio_hang(Seconds at = kDay, Seconds duration = 2 * kDay) {
  Scenario sc = default_scenario();
  sc.duration = duration;
  FaultEvent f;
  f.at = at;
  f.node = "soil-2";
  f.fault.kind = node::FaultKind::radio_hang;
  sc.faults.push_back(f);
  return sc;
}

}  // namespace fixtures
