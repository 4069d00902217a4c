#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fieldnet/cloudcore.hpp"
#include "fieldnet/core.hpp"
#include "fieldnet/journal.hpp"
#include "fieldnet/storeforward.hpp"
#include "fieldnet/telemetry.hpp"

namespace fieldnet::report {

// Everything a run report is computed from. Built the same way whether the
// run just finished in memory or is being re-read from a store directory.
struct NodeRunInfo {
  NodeKind kind = NodeKind::soil;
  std::int64_t nominal_period_s = 0;
  std::map<std::uint64_t, std::int64_t> emitted;  // seq -> emit time
  std::set<std::uint64_t> lost;                   // lost on the node's short link
  std::set<std::uint64_t> in_flight;              // still on the short link at end of run
  std::optional<double> dormant_at;
};

struct RunData {
  std::uint64_t seed = 0;
  double nodes_end = 0;
  double end_t = 0;
  double silence_threshold = 3.0;
  std::map<std::string, NodeRunInfo> nodes;
  std::map<PacketKey, cloud::CloudStore::StoredPacket> cloud;  // stored and quarantined
  std::size_t quarantined = 0;
  std::set<PacketKey> in_gateway;  // at the gateway, not in the cloud
  std::set<PacketKey> in_relay;    // at the relay, not further downstream
  std::set<PacketKey> evicted;     // dropped at the relay before reaching the gateway
  std::uint64_t relay_data_loss = 0;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> links;  // id -> (frames, lost)
};

// Field log records (one per line):
//   meta seed <n> | meta silence_threshold <x>
//   node <id> <kind> <nominal_period_s>
//   emit <id> <seq> <t> | lost <id> <seq> | dormant <id> <t>
//   inflight <id> <seq> | link <id> <frames> <lost> | end <nodes_end> <end_t>
inline void apply_field_log(RunData& d, const std::vector<std::string>& lines) {
  for (const auto& line : lines) {
    const auto tok = split_tokens(line);
    if (tok.empty()) continue;
    const auto op = tok[0];
    auto need = [&](std::size_t n) {
      if (tok.size() < n) throw ValidationError("field log: truncated record '" + line + "'");
    };
    if (op == "meta") {
      need(3);
      if (tok[1] == "seed") d.seed = parse_number<std::uint64_t>(tok[2], "seed");
      else if (tok[1] == "silence_threshold") d.silence_threshold = parse_number<double>(tok[2], "threshold");
    } else if (op == "node") {
      need(4);
      auto& n = d.nodes[std::string(tok[1])];
      n.kind = parse_node_kind(tok[2]);
      n.nominal_period_s = parse_number<std::int64_t>(tok[3], "period");
    } else if (op == "emit") {
      need(4);
      d.nodes[std::string(tok[1])].emitted[parse_number<std::uint64_t>(tok[2], "seq")] =
          parse_number<std::int64_t>(tok[3], "time");
    } else if (op == "lost") {
      need(3);
      d.nodes[std::string(tok[1])].lost.insert(parse_number<std::uint64_t>(tok[2], "seq"));
    } else if (op == "dormant") {
      need(3);
      d.nodes[std::string(tok[1])].dormant_at = parse_number<double>(tok[2], "time");
    } else if (op == "inflight") {
      need(3);
      d.nodes[std::string(tok[1])].in_flight.insert(parse_number<std::uint64_t>(tok[2], "seq"));
    } else if (op == "link") {
      need(4);
      d.links[std::string(tok[1])] = {parse_number<std::uint64_t>(tok[2], "frames"),
                                      parse_number<std::uint64_t>(tok[3], "lost")};
    } else if (op == "end") {
      need(3);
      d.nodes_end = parse_number<double>(tok[1], "time");
      d.end_t = parse_number<double>(tok[2], "time");
    } else {
      throw ValidationError("field log: unknown record '" + std::string(op) + "'");
    }
  }
}

inline RunData collect(const std::vector<std::string>& field_log, const cloud::CloudStore& store,
                       const sf::Relay& relay, const sf::Gateway& gateway) {
  RunData d;
  apply_field_log(d, field_log);
  for (auto& [k, sp] : store.packets()) d.cloud.emplace(k, sp);
  const auto q = store.quarantined();
  d.quarantined = q.size();
  for (auto& [k, sp] : q) d.cloud.emplace(k, sp);
  for (const auto& [k, r] : gateway.records())
    if (!d.cloud.count(k)) d.in_gateway.insert(k);
  for (const auto& [k, e] : relay.entries())
    if (!d.cloud.count(k) && !d.in_gateway.count(k) && !gateway.records().count(k)) d.in_relay.insert(k);
  for (const auto& k : relay.evicted_unacked())
    if (!d.cloud.count(k) && !gateway.records().count(k)) d.evicted.insert(k);
  d.relay_data_loss = relay.data_loss();
  return d;
}

// Re-reads a store directory written by a simulation run.
inline RunData load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw NotFoundError("store directory " + dir.string() + " does not exist");
  auto read = [&](const char* name) {
    const auto p = dir / name;
    return std::filesystem::exists(p) ? Journal(p).read_all() : std::vector<std::string>{};
  };
  auto mem = [](std::vector<std::string> lines) {
    auto j = Journal::in_memory();
    for (auto& l : lines) j->append(l);
    return j;
  };
  auto named = [&](const char* name, auto make) {
    try {
      return make(mem(read(name)));
    } catch (const ValidationError& e) {
      throw ValidationError((dir / name).string() + ": " + e.what());
    }
  };
  auto store = named("cloud.log", [](auto j) { return std::make_unique<cloud::CloudStore>(cloud::CloudConfig{}, j); });
  auto relay = named("relay.log", [](auto j) { return std::make_unique<sf::Relay>(sf::RelayConfig{}, j, std::set<std::string>{}); });
  auto gateway = named("gateway.log", [](auto j) { return std::make_unique<sf::Gateway>(sf::GatewayConfig{}, j); });
  try {
    return collect(read("field.log"), *store, *relay, *gateway);
  } catch (const ValidationError& e) {
    throw ValidationError((dir / "field.log").string() + ": " + e.what());
  }
}

inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

struct NodeAccounting {
  std::uint64_t emitted = 0, delivered = 0, link_lost = 0, evicted = 0, in_relay = 0, in_gateway = 0,
                in_flight = 0, unaccounted = 0, anomalies = 0;

  bool closed() const {
    return unaccounted == 0 && anomalies == 0 &&
           emitted == delivered + link_lost + evicted + in_relay + in_gateway + in_flight;
  }
};

// Places every emitted packet at the furthest point it reached.
inline NodeAccounting account(const RunData& d, const std::string& id, const NodeRunInfo& n) {
  NodeAccounting a;
  for (const auto& [seq, t] : n.emitted) {
    const PacketKey k{id, seq};
    ++a.emitted;
    const bool lost = n.lost.count(seq) > 0;
    const bool reached = d.cloud.count(k) || d.in_gateway.count(k) || d.in_relay.count(k) || d.evicted.count(k);
    if (lost && (reached || n.in_flight.count(seq))) ++a.anomalies;
    if (d.cloud.count(k)) ++a.delivered;
    else if (d.in_gateway.count(k)) ++a.in_gateway;
    else if (d.in_relay.count(k)) ++a.in_relay;
    else if (d.evicted.count(k)) ++a.evicted;
    else if (n.in_flight.count(seq)) ++a.in_flight;
    else if (lost) ++a.link_lost;
    else ++a.unaccounted;
  }
  // Anything downstream that the node never emitted is an accounting error too.
  for (const auto& [k, sp] : d.cloud)
    if (k.node_id == id && !n.emitted.count(k.seq)) ++a.anomalies;
  return a;
}

inline nlohmann::ordered_json build(const RunData& d) {
  using nlohmann::ordered_json;
  ordered_json nodes = ordered_json::object();
  NodeAccounting total;
  bool closure_ok = true;
  std::vector<double> latencies;

  for (const auto& [id, n] : d.nodes) {
    const auto a = account(d, id, n);
    closure_ok = closure_ok && a.closed();
    total.emitted += a.emitted;
    total.delivered += a.delivered;
    total.link_lost += a.link_lost;
    total.evicted += a.evicted;
    total.in_relay += a.in_relay;
    total.in_gateway += a.in_gateway;
    total.in_flight += a.in_flight;

    std::vector<const cloud::CloudStore::StoredPacket*> delivered;
    for (const auto& [k, sp] : d.cloud) {
      if (k.node_id != id || !n.emitted.count(k.seq)) continue;
      delivered.push_back(&sp);
      latencies.push_back(static_cast<double>(sp.stored_t - sp.packet.t));
    }
    std::sort(delivered.begin(), delivered.end(),
              [](auto* x, auto* y) { return std::pair(x->packet.t, x->packet.seq) < std::pair(y->packet.t, y->packet.seq); });

    ordered_json timeline = ordered_json::array();
    std::int64_t bucket = -1;
    for (auto* sp : delivered) {
      const std::int64_t b = sp->packet.t / static_cast<std::int64_t>(6 * kHour);
      if (b == bucket) continue;
      bucket = b;
      timeline.push_back({sp->packet.t, sp->packet.battery_mv});
    }

    std::uint64_t episodes = 0;
    for (std::size_t i = 0; i < delivered.size(); ++i) {
      const double from = static_cast<double>(delivered[i]->packet.t);
      const double to = i + 1 < delivered.size() ? static_cast<double>(delivered[i + 1]->packet.t) : d.nodes_end;
      const double limit = d.silence_threshold * static_cast<double>(delivered[i]->packet.period_s);
      if (to - from > limit) ++episodes;
    }

    ordered_json j;
    j["kind"] = to_string(n.kind);
    j["emitted"] = a.emitted;
    j["delivered"] = a.delivered;
    j["link_lost"] = a.link_lost;
    j["evicted"] = a.evicted;
    j["in_relay"] = a.in_relay;
    j["in_gateway"] = a.in_gateway;
    j["in_flight"] = a.in_flight;
    j["yield"] = a.emitted ? static_cast<double>(a.delivered) / static_cast<double>(a.emitted) : 0.0;
    j["closure_ok"] = a.closed();
    j["depleted_at_s"] = n.dormant_at ? ordered_json(*n.dormant_at) : ordered_json(nullptr);
    j["silent_episodes"] = episodes;
    j["battery_timeline"] = timeline;
    nodes[id] = j;
  }

  ordered_json links = ordered_json::object();
  for (const auto& [id, fl] : d.links) links[id] = {{"frames", fl.first}, {"lost", fl.second}};

  ordered_json r;
  r["format"] = 1;
  r["seed"] = d.seed;
  r["nodes_end_s"] = d.nodes_end;
  r["end_s"] = d.end_t;
  r["totals"] = {
      {"emitted", total.emitted},
      {"delivered", total.delivered},
      {"link_lost", total.link_lost},
      {"evicted", total.evicted},
      {"in_relay", total.in_relay},
      {"in_gateway", total.in_gateway},
      {"in_flight", total.in_flight},
      {"yield", total.emitted ? static_cast<double>(total.delivered) / static_cast<double>(total.emitted) : 0.0},
      {"quarantined", d.quarantined},
      {"relay_data_loss", d.relay_data_loss},
  };
  r["latency_s"] = {
      {"count", latencies.size()},
      {"p50", percentile(latencies, 0.50)},
      {"p90", percentile(latencies, 0.90)},
      {"p99", percentile(latencies, 0.99)},
      {"max", latencies.empty() ? 0.0 : *std::max_element(latencies.begin(), latencies.end())},
  };
  r["links"] = links;
  r["nodes"] = nodes;
  r["closure_ok"] = closure_ok;
  return r;
}

inline std::string render(const RunData& d) { return build(d).dump(2) + "\n"; }

}  // namespace fieldnet::report
