#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fieldnet/cloudcore.hpp"
#include "fieldnet/core.hpp"
#include "fieldnet/environment.hpp"
#include "fieldnet/fieldnode.hpp"
#include "fieldnet/radiolink.hpp"
#include "fieldnet/storeforward.hpp"

namespace fieldnet {

struct NodeSpec {
  node::NodeConfig cfg;
  std::set<std::string> groups;
  bool registered = true;  // registered with the cloud before the run starts
  std::optional<radio::LinkSpec> short_link;  // overrides the scenario-wide short link
  std::optional<Seconds> first_wake;
};

struct FaultEvent {
  Seconds at = 0;
  std::string node;   // node-targeted fault, or
  std::string link;   // link-targeted outage ("long", "uplink", "short:<node>")
  node::FaultSpec fault;
  Seconds until = 0;  // end of a link outage
};

struct CommandEvent {
  Seconds at = 0;
  std::string group;  // group rate change, or
  std::string node;   // single-node command
  Command command;
};

struct Timing {
  Seconds relay_flush_interval = 30;
  Seconds upload_interval = 120;
  Seconds soil_substep = 60;
  Seconds sheep_substep = 10;
  Seconds drain_limit = 2 * kDay;
};

struct Scenario {
  std::uint64_t seed = 1;
  Seconds duration = 14 * kDay;
  double time_compression = 1.0;  // live mode only

  env::WeatherScenario weather;
  env::SoilState soil_initial;
  env::SoilParams soil;
  std::vector<env::GeoPoint> fence;
  env::MovementParams movement;

  std::vector<NodeSpec> nodes;

  radio::LinkSpec short_link = radio::default_spec(radio::LinkClass::short_range);
  radio::LinkSpec long_link = radio::default_spec(radio::LinkClass::long_range);
  radio::LinkSpec uplink = [] {
    auto s = radio::default_spec(radio::LinkClass::uplink);
    s.latency_s = 0;
    return s;
  }();

  sf::RelayConfig relay;
  sf::GatewayConfig gateway;
  cloud::CloudConfig cloud;
  Timing timing;

  std::vector<FaultEvent> faults;
  std::vector<CommandEvent> commands;
  std::vector<Seconds> restarts;  // instants at which relay and gateway are restarted from their logs
};

// Field of study used by the built-in presets: a roughly 400 m x 300 m paddock.
inline std::vector<env::GeoPoint> default_fence() {
  const env::GeoPoint sw{54.0100, -2.7800};
  return {sw, env::offset_meters(sw, 400, 0), env::offset_meters(sw, 400, 300), env::offset_meters(sw, 0, 300)};
}

inline NodeSpec soil_node_spec(const std::string& id, env::GeoPoint pos, std::size_t packs = 3,
                               double trickle_mA = 30.0, bool with_reference = false) {
  NodeSpec s;
  s.cfg.id = id;
  s.cfg.kind = NodeKind::soil;
  s.cfg.position = pos;
  s.cfg.complement = node::soil_complement(with_reference);
  s.cfg.power = node::PowerProfile{};
  s.cfg.duty = node::DutyCycle{300, 5};
  s.cfg.bank = node::BatteryBank::uniform(packs, 7800, trickle_mA);
  s.groups = {"soil"};
  return s;
}

inline NodeSpec livestock_node_spec(const std::string& id, env::GeoPoint pos) {
  NodeSpec s;
  s.cfg.id = id;
  s.cfg.kind = NodeKind::livestock;
  s.cfg.position = pos;
  s.cfg.complement = node::livestock_complement();
  s.cfg.power = node::PowerProfile{100.0, 30.0, 90.0, 30.0, 45.0};
  s.cfg.duty = node::DutyCycle{300, 5};
  s.cfg.bank = node::BatteryBank::uniform(1, 10000, 0);
  s.groups = {"livestock"};
  return s;
}

// The deployment as described for the study site: four soil nodes with
// three-pack banks and solar trickle, five GPS collars, one relay, one
// gateway, a storm-season fortnight.
inline Scenario default_scenario() {
  Scenario sc;
  sc.seed = 42;
  sc.duration = 14 * kDay;
  sc.fence = default_fence();
  sc.weather.temperature = {9.0, 4.0, 3.0 * kHour};
  sc.weather.humidity = {85.0, 10.0, 12.0 * kHour};
  sc.weather.storms = {
      {2.0 * kDay, 2.5 * kDay, 8.0, 0.2},
      {5.0 * kDay, 6.5 * kDay, 12.0, 0.1},
      {6.0 * kDay, 6.25 * kDay, 6.0, 0.1},
      {10.0 * kDay, 10.75 * kDay, 5.0, 0.3},
  };
  const env::GeoPoint sw = sc.fence.front();
  for (int i = 0; i < 4; ++i) {
    auto s = soil_node_spec("soil-" + std::to_string(i + 1), env::offset_meters(sw, 80.0 + 70.0 * i, 60.0 + 40.0 * i), 3,
                            30.0, i == 0);
    if (i < 2) s.groups.insert("riverside");
    sc.nodes.push_back(std::move(s));
  }
  for (int i = 0; i < 5; ++i) {
    sc.nodes.push_back(
        livestock_node_spec("sheep-" + std::to_string(i + 1), env::offset_meters(sw, 150.0 + 25.0 * i, 150.0)));
  }
  return sc;
}

inline void validate(const Scenario& sc) {
  if (!(sc.duration > 0)) throw ValidationError("duration must be > 0");
  if (!(sc.time_compression > 0)) throw ValidationError("time_compression must be > 0");
  env::validate(sc.weather);
  env::validate(sc.soil_initial);
  radio::validate(sc.short_link);
  radio::validate(sc.long_link);
  radio::validate(sc.uplink);
  std::set<std::string> ids;
  bool has_livestock = false;
  for (const auto& n : sc.nodes) {
    if (!ids.insert(n.cfg.id).second) throw ValidationError("duplicate node id '" + n.cfg.id + "'");
    node::NodeState probe(n.cfg);  // validates the node configuration
    if (n.short_link) radio::validate(*n.short_link);
    has_livestock = has_livestock || n.cfg.kind == NodeKind::livestock;
  }
  if (has_livestock) env::GeoFence fence(sc.fence);
  const auto link_ok = [&](const std::string& l) {
    return l == "long" || l == "uplink" || (l.rfind("short:", 0) == 0 && ids.count(l.substr(6)));
  };
  for (const auto& f : sc.faults) {
    if (f.at < 0 || f.at > sc.duration) throw ValidationError("fault time outside the scenario duration");
    if (!f.node.empty() && !ids.count(f.node)) throw ValidationError("fault references unknown node '" + f.node + "'");
    if (!f.link.empty()) {
      if (!link_ok(f.link)) throw ValidationError("fault references unknown link '" + f.link + "'");
      if (!(f.until > f.at)) throw ValidationError("link outage requires until > at");
    }
    if (f.node.empty() == f.link.empty()) throw ValidationError("fault must name exactly one of node or link");
    if (!f.node.empty()) {
      const auto& spec = *std::find_if(sc.nodes.begin(), sc.nodes.end(),
                                       [&](const NodeSpec& n) { return n.cfg.id == f.node; });
      node::NodeState probe(spec.cfg);
      node::inject_fault(probe, f.fault, f.at);  // rejects faults the node cannot take
    }
  }
  for (const auto& c : sc.commands) {
    if (c.at < 0 || c.at > sc.duration) throw ValidationError("command time outside the scenario duration");
    if (!c.node.empty() && !ids.count(c.node)) throw ValidationError("command references unknown node '" + c.node + "'");
    if (c.node.empty() == c.group.empty()) throw ValidationError("command must name exactly one of node or group");
    if (!c.group.empty() && std::none_of(sc.nodes.begin(), sc.nodes.end(), [&](const NodeSpec& n) {
          return n.registered && n.groups.count(c.group);
        }))
      throw ValidationError("command targets empty group '" + c.group + "'");
    if (c.command.kind == Command::Kind::set_period && c.command.period_s < sc.cloud.min_period_s)
      throw ValidationError("commanded period below the minimum");
  }
  for (auto r : sc.restarts)
    if (r < 0 || r > sc.duration) throw ValidationError("restart time outside the scenario duration");
  if (!(sc.timing.relay_flush_interval > 0 && sc.timing.upload_interval > 0 && sc.timing.soil_substep > 0 &&
        sc.timing.sheep_substep > 0 && sc.timing.drain_limit >= 0))
    throw ValidationError("timing intervals must be > 0");
}

}  // namespace fieldnet
