#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <yaml-cpp/yaml.h>

#include "fieldnet/scenario.hpp"

namespace fieldnet {

// Scenario files are YAML with a `format: 1` header. See README for keys.
namespace scenario_yaml {

inline std::string where(const YAML::Node& n) {
  const auto m = n.Mark();
  return m.line >= 0 ? "line " + std::to_string(m.line + 1) + ": " : "";
}

[[noreturn]] inline void fail(const YAML::Node& n, const std::string& msg) { throw ValidationError(where(n) + msg); }

template <typename T>
T as(const YAML::Node& n, const std::string& what) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(n, "bad value for '" + what + "'");
  }
}

// Seconds: a bare number, or number-unit segments such as 90s, 6h, 2d12h.
inline Seconds duration(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) fail(n, "'" + what + "' must be a duration");
  const std::string s = n.Scalar();
  const auto bad = [&]() -> Seconds { fail(n, "bad duration '" + s + "' for '" + what + "'"); };
  if (s.empty()) return bad();
  double total = 0;
  std::size_t i = 0;
  bool units = false;
  while (i < s.size()) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s.substr(i), &used);
    } catch (const std::exception&) {
      return bad();
    }
    i += used;
    if (i == s.size()) {
      if (units) return bad();  // "2d3" is ambiguous
      return v;
    }
    double scale = 0;
    switch (s[i]) {
      case 's': scale = 1; break;
      case 'm': scale = kMinute; break;
      case 'h': scale = kHour; break;
      case 'd': scale = kDay; break;
      default: return bad();
    }
    ++i;
    units = true;
    total += v * scale;
  }
  return total;
}

inline void check_keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& section) {
  if (!map.IsMap()) fail(map, "section '" + section + "' must be a mapping");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key)) fail(kv.first, "unknown key '" + key + "' in " + section);
  }
}

template <typename T>
void maybe(const YAML::Node& map, const char* key, T& out) {
  if (const auto n = map[key]) out = as<T>(n, key);
}

inline void maybe_duration(const YAML::Node& map, const char* key, Seconds& out) {
  if (const auto n = map[key]) out = duration(n, key);
}

inline env::GeoPoint point(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence() || n.size() != 2) fail(n, "'" + what + "' must be [lat, lon]");
  return {as<double>(n[0], what), as<double>(n[1], what)};
}

inline std::vector<radio::Window> windows(const YAML::Node& n, const std::string& what) {
  std::vector<radio::Window> out;
  if (!n.IsSequence()) fail(n, "'" + what + "' must be a list of [start, end]");
  for (const auto& w : n) {
    if (!w.IsSequence() || w.size() != 2) fail(w, "outage must be [start, end]");
    radio::Window win{duration(w[0], what), duration(w[1], what)};
    if (!(win.start < win.end)) fail(w, "outage requires start < end");
    out.push_back(win);
  }
  return out;
}

inline void link_spec(const YAML::Node& n, radio::LinkSpec& spec, const std::string& what) {
  check_keys(n, {"loss", "latency", "outages"}, what);
  maybe(n, "loss", spec.loss_prob);
  maybe_duration(n, "latency", spec.latency_s);
  if (const auto o = n["outages"]) spec.outages = windows(o, what + ".outages");
  try {
    radio::validate(spec);
  } catch (const ValidationError& e) {
    fail(n, e.what());
  }
}

inline std::set<std::string> string_set(const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence()) fail(n, "'" + what + "' must be a list");
  std::set<std::string> out;
  for (const auto& x : n) out.insert(as<std::string>(x, what));
  return out;
}

inline NodeSpec node_spec(const YAML::Node& n) {
  check_keys(n,
             {"id", "kind", "position", "groups", "registered", "packs", "pack_capacity", "pack_charges",
              "lower_cut", "solar_ma", "active_ma", "sleep_ma", "sleep_s", "awake_s", "reference_sensor",
              "first_wake", "link", "gps", "noise"},
             "node");
  if (!n["id"]) fail(n, "node needs an 'id'");
  if (!n["kind"]) fail(n, "node needs a 'kind'");
  const auto id = as<std::string>(n["id"], "id");
  NodeKind kind;
  try {
    kind = parse_node_kind(as<std::string>(n["kind"], "kind"));
  } catch (const ValidationError& e) {
    fail(n["kind"], e.what());
  }
  const env::GeoPoint pos = n["position"] ? point(n["position"], "position") : default_fence().front();
  bool with_ref = false;
  maybe(n, "reference_sensor", with_ref);
  NodeSpec s = kind == NodeKind::soil ? soil_node_spec(id, pos, 3, 30.0, with_ref) : livestock_node_spec(id, pos);

  std::size_t packs = s.cfg.bank.packs.size();
  double capacity = s.cfg.bank.packs.front().capacity_mAh;
  double lower_cut = 0;
  maybe(n, "packs", packs);
  maybe(n, "pack_capacity", capacity);
  maybe(n, "lower_cut", lower_cut);
  double solar = s.cfg.bank.trickle_rate_mA;
  maybe(n, "solar_ma", solar);
  s.cfg.bank = node::BatteryBank::uniform(packs, capacity, solar);
  for (auto& p : s.cfg.bank.packs) p.lower_cut_mAh = lower_cut;
  if (const auto c = n["pack_charges"]) {
    if (!c.IsSequence() || c.size() != packs) fail(c, "'pack_charges' needs one entry per pack");
    for (std::size_t i = 0; i < packs; ++i) s.cfg.bank.packs[i].charge_mAh = as<double>(c[i], "pack_charges");
  }
  maybe(n, "active_ma", s.cfg.power.active_mA);
  maybe(n, "sleep_ma", s.cfg.power.sleep_mA);
  maybe_duration(n, "sleep_s", s.cfg.duty.sleep_s);
  maybe_duration(n, "awake_s", s.cfg.duty.awake_s);
  if (const auto g = n["groups"]) s.groups = string_set(g, "groups");
  maybe(n, "registered", s.registered);
  if (const auto fw = n["first_wake"]) s.first_wake = duration(fw, "first_wake");
  if (const auto l = n["link"]) {
    radio::LinkSpec spec = radio::default_spec(radio::LinkClass::short_range);
    link_spec(l, spec, "node link");
    s.short_link = spec;
  }
  if (const auto g = n["gps"]) {
    check_keys(g, {"sigma_m", "delay_min", "delay_max", "failure_prob"}, "gps");
    maybe(g, "sigma_m", s.cfg.gps.sigma_m);
    maybe_duration(g, "delay_min", s.cfg.gps.delay_min_s);
    maybe_duration(g, "delay_max", s.cfg.gps.delay_max_s);
    maybe(g, "failure_prob", s.cfg.gps.failure_prob);
  }
  if (const auto z = n["noise"]) {
    if (kind != NodeKind::soil) fail(z, "'noise' applies to soil nodes");
    check_keys(z, {"air_temp", "air_humidity", "soil_temp", "moisture_cheap", "moisture_ref"}, "noise");
    node::NoiseConfig nc;
    maybe(z, "air_temp", nc.air_temp);
    maybe(z, "air_humidity", nc.air_humidity);
    maybe(z, "soil_temp", nc.soil_temp);
    maybe(z, "moisture_cheap", nc.moisture_cheap);
    maybe(z, "moisture_ref", nc.moisture_ref);
    s.cfg.complement = node::soil_complement(with_ref, nc);
  }
  try {
    node::NodeState probe(s.cfg);
  } catch (const ValidationError& e) {
    fail(n, "node '" + id + "': " + e.what());
  }
  return s;
}

inline FaultEvent fault_event(const YAML::Node& n) {
  check_keys(n, {"at", "node", "link", "fault", "channel", "rate", "until"}, "fault");
  FaultEvent f;
  if (!n["at"]) fail(n, "fault needs 'at'");
  f.at = duration(n["at"], "at");
  maybe(n, "node", f.node);
  maybe(n, "link", f.link);
  if (!f.link.empty()) {
    if (n["fault"] && as<std::string>(n["fault"], "fault") != "outage") fail(n["fault"], "links only take 'outage'");
    if (!n["until"]) fail(n, "link outage needs 'until'");
    f.until = duration(n["until"], "until");
    return f;
  }
  if (!n["fault"]) fail(n, "fault needs 'fault'");
  try {
    f.fault.kind = node::parse_fault_kind(as<std::string>(n["fault"], "fault"));
  } catch (const ValidationError& e) {
    fail(n["fault"], e.what());
  }
  maybe(n, "channel", f.fault.channel);
  maybe(n, "rate", f.fault.rate);
  return f;
}

inline CommandEvent command_event(const YAML::Node& n) {
  check_keys(n, {"at", "group", "node", "set_period", "command"}, "command");
  CommandEvent c;
  if (!n["at"]) fail(n, "command needs 'at'");
  c.at = duration(n["at"], "at");
  maybe(n, "group", c.group);
  maybe(n, "node", c.node);
  if (const auto p = n["set_period"]) {
    c.command = {Command::Kind::set_period, static_cast<std::int64_t>(duration(p, "set_period"))};
  } else if (const auto k = n["command"]) {
    const auto s = as<std::string>(k, "command");
    if (s != "power_cycle") fail(k, "unknown command '" + s + "'");
    c.command = {Command::Kind::power_cycle, 0};
  } else {
    fail(n, "command needs 'set_period' or 'command'");
  }
  return c;
}

inline Scenario parse(const YAML::Node& root) {
  if (!root.IsMap()) throw ValidationError("scenario must be a mapping");
  check_keys(root,
             {"format", "preset", "seed", "duration", "time_compression", "environment", "nodes", "links",
              "storeforward", "cloud", "faults", "commands", "restarts"},
             "scenario");
  if (!root["format"]) throw ValidationError("scenario needs a 'format: 1' header");
  if (as<int>(root["format"], "format") != 1) fail(root["format"], "unsupported scenario format");

  Scenario sc;
  if (const auto p = root["preset"]) {
    const auto name = as<std::string>(p, "preset");
    if (name != "default") fail(p, "unknown preset '" + name + "'");
    sc = default_scenario();
  } else {
    sc.fence = default_fence();
  }
  maybe(root, "seed", sc.seed);
  maybe_duration(root, "duration", sc.duration);
  maybe(root, "time_compression", sc.time_compression);

  if (const auto e = root["environment"]) {
    check_keys(e, {"temperature", "humidity", "storms", "soil", "fence", "movement"}, "environment");
    auto diurnal = [&](const YAML::Node& d, env::Diurnal& out, const char* what) {
      check_keys(d, {"mean", "amplitude", "phase"}, what);
      maybe(d, "mean", out.mean);
      maybe(d, "amplitude", out.amplitude);
      maybe_duration(d, "phase", out.phase);
    };
    if (const auto t = e["temperature"]) diurnal(t, sc.weather.temperature, "temperature");
    if (const auto h = e["humidity"]) diurnal(h, sc.weather.humidity, "humidity");
    if (const auto s = e["storms"]) {
      if (!s.IsSequence()) fail(s, "'storms' must be a list");
      sc.weather.storms.clear();
      for (const auto& st : s) {
        check_keys(st, {"start", "end", "intensity", "irradiance"}, "storm");
        env::Storm storm;
        if (!st["start"] || !st["end"]) fail(st, "storm needs 'start' and 'end'");
        storm.start = duration(st["start"], "start");
        storm.end = duration(st["end"], "end");
        maybe(st, "intensity", storm.intensity_mm_h);
        maybe(st, "irradiance", storm.irradiance_factor);
        try {
          env::validate(env::WeatherScenario{{storm}, {}, {}});
        } catch (const ValidationError& ex) {
          fail(st, ex.what());
        }
        sc.weather.storms.push_back(storm);
      }
    }
    if (const auto s = e["soil"]) {
      check_keys(s, {"theta", "theta_r", "theta_sat", "temp", "k_in", "k_out", "temp_lag"}, "soil");
      maybe(s, "theta", sc.soil_initial.theta);
      maybe(s, "theta_r", sc.soil_initial.theta_r);
      maybe(s, "theta_sat", sc.soil_initial.theta_sat);
      maybe(s, "temp", sc.soil_initial.temp_c);
      maybe(s, "k_in", sc.soil.k_in);
      maybe(s, "k_out", sc.soil.k_out);
      maybe_duration(s, "temp_lag", sc.soil.temp_lag_s);
      try {
        env::validate(sc.soil_initial);
      } catch (const ValidationError& ex) {
        fail(s, ex.what());
      }
    }
    if (const auto f = e["fence"]) {
      if (!f.IsSequence()) fail(f, "'fence' must be a list of [lat, lon]");
      sc.fence.clear();
      for (const auto& p : f) sc.fence.push_back(point(p, "fence"));
      try {
        env::GeoFence check(sc.fence);
      } catch (const ValidationError& ex) {
        fail(f, ex.what());
      }
    }
    if (const auto m = e["movement"]) {
      check_keys(m, {"speed_scale", "heading_sigma", "walking_speed", "lie_down_prob", "get_up_prob"}, "movement");
      maybe(m, "speed_scale", sc.movement.speed_scale);
      maybe(m, "heading_sigma", sc.movement.heading_sigma);
      maybe(m, "walking_speed", sc.movement.walking_speed);
      maybe(m, "lie_down_prob", sc.movement.lie_down_prob);
      maybe(m, "get_up_prob", sc.movement.get_up_prob);
    }
  }

  if (const auto ns = root["nodes"]) {
    if (!ns.IsSequence()) fail(ns, "'nodes' must be a list");
    sc.nodes.clear();
    std::set<std::string> ids;
    for (const auto& n : ns) {
      auto spec = node_spec(n);
      if (!ids.insert(spec.cfg.id).second) fail(n, "duplicate node id '" + spec.cfg.id + "'");
      sc.nodes.push_back(std::move(spec));
    }
  }

  if (const auto l = root["links"]) {
    check_keys(l, {"short", "long", "uplink"}, "links");
    if (const auto s = l["short"]) link_spec(s, sc.short_link, "links.short");
    if (const auto s = l["long"]) link_spec(s, sc.long_link, "links.long");
    if (const auto s = l["uplink"]) link_spec(s, sc.uplink, "links.uplink");
  }

  if (const auto s = root["storeforward"]) {
    check_keys(s,
               {"relay_capacity", "retry_timeout", "batch_limit", "upload_batch", "cloud_retry_timeout",
                "relay_flush_interval", "upload_interval", "drain_limit"},
               "storeforward");
    maybe(s, "relay_capacity", sc.relay.capacity);
    maybe_duration(s, "retry_timeout", sc.relay.retry_timeout);
    maybe(s, "batch_limit", sc.relay.batch_limit);
    maybe(s, "upload_batch", sc.gateway.upload_batch);
    maybe_duration(s, "cloud_retry_timeout", sc.gateway.cloud_retry_timeout);
    maybe_duration(s, "relay_flush_interval", sc.timing.relay_flush_interval);
    maybe_duration(s, "upload_interval", sc.timing.upload_interval);
    maybe_duration(s, "drain_limit", sc.timing.drain_limit);
  }

  if (const auto c = root["cloud"]) {
    check_keys(c, {"silence_threshold", "min_period"}, "cloud");
    maybe(c, "silence_threshold", sc.cloud.silence_threshold);
    if (const auto m = c["min_period"]) sc.cloud.min_period_s = static_cast<std::int64_t>(duration(m, "min_period"));
  }

  if (const auto fs = root["faults"]) {
    if (!fs.IsSequence()) fail(fs, "'faults' must be a list");
    for (const auto& f : fs) sc.faults.push_back(fault_event(f));
  }
  if (const auto cs = root["commands"]) {
    if (!cs.IsSequence()) fail(cs, "'commands' must be a list");
    for (const auto& c : cs) sc.commands.push_back(command_event(c));
  }
  if (const auto rs = root["restarts"]) {
    if (!rs.IsSequence()) fail(rs, "'restarts' must be a list");
    for (const auto& r : rs) sc.restarts.push_back(duration(r, "restarts"));
  }

  // Cross-reference checks, pointed at the section that holds the reference.
  try {
    validate(sc);
  } catch (const ValidationError& ex) {
    const std::string msg = ex.what();
    YAML::Node at = root;
    if (msg.find("fault") != std::string::npos && root["faults"]) at = root["faults"];
    else if (msg.find("command") != std::string::npos && root["commands"]) at = root["commands"];
    else if (msg.find("restart") != std::string::npos && root["restarts"]) at = root["restarts"];
    else if (root["nodes"]) at = root["nodes"];
    fail(at, msg);
  }
  return sc;
}

}  // namespace scenario_yaml

inline Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return scenario_yaml::parse(root);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot read scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace fieldnet
