#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fieldnet/core.hpp"
#include "fieldnet/environment.hpp"
#include "fieldnet/telemetry.hpp"

namespace fieldnet::node {

// Measured node currents. The board_* fields record the share drawn by the
// microcontroller board alone and do not enter the energy model.
struct PowerProfile {
  double active_mA = 130.0;
  double sleep_mA = 45.0;
  double board_active_mA = 90.0;
  double board_sleep_mA = 30.0;
  Seconds gps_fix_extra_s = 0;  // nominal extra awake time per GPS fix
};

inline void validate(const PowerProfile& p) {
  if (!(p.active_mA > p.sleep_mA && p.sleep_mA > 0))
    throw ValidationError("power profile requires active_mA > sleep_mA > 0");
}

struct DutyCycle {
  Seconds sleep_s = 300;
  Seconds awake_s = 5;

  Seconds period() const { return sleep_s + awake_s; }
};

inline void validate(const DutyCycle& d) {
  if (!(d.sleep_s > 0 && d.awake_s > 0)) throw ValidationError("duty cycle durations must be > 0");
}

// ---------------------------------------------------------------------------
// Battery bank

struct Pack {
  double capacity_mAh = 7800;
  double charge_mAh = 7800;
  double lower_cut_mAh = 0;  // protection opens the bank when charge falls to this
};

// Packs wired in series share one current, so every pack sees the same drain.
// If any pack reaches a protection threshold the whole bank is cut.
struct BatteryBank {
  std::vector<Pack> packs;
  bool protection_cut = false;
  double trickle_rate_mA = 0;             // full-sun solar charge current
  std::optional<double> upper_cut_frac;   // trips when one pack fills to this fraction ahead of others
  double drawn_mAh = 0;                   // cumulative, for energy accounting
  double harvested_mAh = 0;

  static BatteryBank uniform(std::size_t n, double capacity_mAh, double trickle_mA = 0) {
    BatteryBank b;
    b.packs.assign(n, Pack{capacity_mAh, capacity_mAh, 0});
    b.trickle_rate_mA = trickle_mA;
    return b;
  }

  double total_charge() const {
    double s = 0;
    for (const auto& p : packs) s += p.charge_mAh;
    return s;
  }

  double total_capacity() const {
    double s = 0;
    for (const auto& p : packs) s += p.capacity_mAh;
    return s;
  }

  double available() const { return protection_cut ? 0.0 : total_charge(); }

  // Charge the bank can still deliver before the first pack hits its cut.
  double headroom() const {
    if (protection_cut || packs.empty()) return 0;
    double m = packs.front().charge_mAh - packs.front().lower_cut_mAh;
    for (const auto& p : packs) m = std::min(m, p.charge_mAh - p.lower_cut_mAh);
    return std::max(0.0, m) * static_cast<double>(packs.size());
  }
};

inline void validate(const BatteryBank& b) {
  if (b.packs.empty()) throw ValidationError("battery bank needs at least one pack");
  for (const auto& p : b.packs) {
    if (!(p.capacity_mAh > 0)) throw ValidationError("pack capacity must be > 0");
    if (p.charge_mAh < 0 || p.charge_mAh > p.capacity_mAh)
      throw ValidationError("pack charge outside [0, capacity]");
    if (p.lower_cut_mAh < 0 || p.lower_cut_mAh >= p.capacity_mAh)
      throw ValidationError("pack lower cut outside [0, capacity)");
  }
  if (b.trickle_rate_mA < 0) throw ValidationError("trickle rate must be >= 0");
}

inline double cycle_charge_mAh(const PowerProfile& p, Seconds awake_s, Seconds sleep_s) {
  return (awake_s * p.active_mA + sleep_s * p.sleep_mA) / 3600.0;
}

inline BatteryBank consume_energy(BatteryBank bank, const PowerProfile& p, Seconds awake_s, Seconds sleep_s) {
  if (awake_s < 0 || sleep_s < 0) throw ValidationError("consume_energy durations must be >= 0");
  const double want = cycle_charge_mAh(p, awake_s, sleep_s);
  if (want <= 0 || bank.protection_cut) return bank;
  const double drawn = std::min(want, bank.headroom());
  const double share = drawn / static_cast<double>(bank.packs.size());
  bool at_cut = false;
  for (auto& pack : bank.packs) {
    pack.charge_mAh = std::max(0.0, pack.charge_mAh - share);
    if (pack.charge_mAh <= pack.lower_cut_mAh) at_cut = true;
  }
  bank.drawn_mAh += drawn;
  if (at_cut || drawn < want) bank.protection_cut = true;
  return bank;
}

inline BatteryBank solar_harvest(BatteryBank bank, double irradiance_factor, Seconds dt) {
  if (dt < 0) throw ValidationError("solar_harvest requires dt >= 0");
  if (bank.protection_cut || bank.trickle_rate_mA <= 0) return bank;
  const double f = std::clamp(irradiance_factor, 0.0, 1.0);
  const double offered = bank.trickle_rate_mA * f * dt / 3600.0;
  if (offered <= 0) return bank;
  const double share = offered / static_cast<double>(bank.packs.size());
  double accepted = 0;
  for (auto& pack : bank.packs) {
    const double room = pack.capacity_mAh - pack.charge_mAh;
    const double take = std::min(room, share);
    pack.charge_mAh += take;
    accepted += take;
  }
  bank.harvested_mAh += accepted;
  if (bank.upper_cut_frac && bank.packs.size() > 1) {
    bool one_full = false;
    bool one_lagging = false;
    for (const auto& pack : bank.packs) {
      if (pack.charge_mAh >= *bank.upper_cut_frac * pack.capacity_mAh) one_full = true;
      else one_lagging = true;
    }
    if (one_full && one_lagging) bank.protection_cut = true;
  }
  return bank;
}

// Battery telemetry: affine map from charge fraction onto a Li-ion voltage span.
inline constexpr std::int32_t kEmptyMillivolts = 3300;
inline constexpr std::int32_t kFullMillivolts = 4200;

inline std::int32_t battery_mv(const BatteryBank& b) {
  const double cap = b.total_capacity();
  const double frac = cap > 0 ? b.available() / cap : 0.0;
  return kEmptyMillivolts +
         static_cast<std::int32_t>(std::lround(frac * (kFullMillivolts - kEmptyMillivolts)));
}

// ---------------------------------------------------------------------------
// Sensors

enum class ChannelKind {
  air_temp,
  air_humidity,
  soil_temp,
  soil_moisture_cheap,
  soil_moisture_ref,
  surface_flow,
  gps,
  accel_status,
};

enum class Grade { cheap, reference };

inline const char* to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::air_temp: return "air_temp";
    case ChannelKind::air_humidity: return "air_humidity";
    case ChannelKind::soil_temp: return "soil_temp";
    case ChannelKind::soil_moisture_cheap: return "soil_moisture_cheap";
    case ChannelKind::soil_moisture_ref: return "soil_moisture_ref";
    case ChannelKind::surface_flow: return "surface_flow";
    case ChannelKind::gps: return "gps";
    case ChannelKind::accel_status: return "accel_status";
  }
  return "?";
}

inline ChannelKind parse_channel_kind(std::string_view s) {
  for (auto k : {ChannelKind::air_temp, ChannelKind::air_humidity, ChannelKind::soil_temp,
                 ChannelKind::soil_moisture_cheap, ChannelKind::soil_moisture_ref,
                 ChannelKind::surface_flow, ChannelKind::gps, ChannelKind::accel_status}) {
    if (s == to_string(k)) return k;
  }
  throw ValidationError("unknown channel kind '" + std::string(s) + "'");
}

inline const char* to_string(Grade g) { return g == Grade::cheap ? "cheap" : "reference"; }

inline const char* unit_of(ChannelKind k) {
  switch (k) {
    case ChannelKind::air_temp:
    case ChannelKind::soil_temp: return "degC";
    case ChannelKind::air_humidity: return "pct_rh";
    case ChannelKind::soil_moisture_cheap:
    case ChannelKind::soil_moisture_ref: return "pct_vwc";
    case ChannelKind::surface_flow: return "bool";
    case ChannelKind::gps: return "deg";
    case ChannelKind::accel_status: return "label";
  }
  return "?";
}

inline bool is_soil_channel(ChannelKind k) {
  return k == ChannelKind::soil_temp || k == ChannelKind::soil_moisture_cheap ||
         k == ChannelKind::soil_moisture_ref;
}

struct ChannelSpec {
  std::string id;
  ChannelKind kind = ChannelKind::air_temp;
  double mount_cm = 0;  // positive above the surface, negative below
  double noise_sigma = 0;
  Grade grade = Grade::cheap;
};

struct NoiseConfig {
  double air_temp = 0.3;
  double air_humidity = 2.0;
  double soil_temp = 0.3;
  double moisture_cheap = 2.0;
  double moisture_ref = 0.5;
};

using SensorComplement = std::vector<ChannelSpec>;

inline SensorComplement soil_complement(bool with_reference, const NoiseConfig& n = {}) {
  SensorComplement c;
  for (int i = 1; i <= 3; ++i) {
    c.push_back({"air_temp." + std::to_string(i), ChannelKind::air_temp, 35, n.air_temp, Grade::cheap});
    c.push_back({"air_humidity." + std::to_string(i), ChannelKind::air_humidity, 35, n.air_humidity, Grade::cheap});
  }
  for (int i = 1; i <= 3; ++i)
    c.push_back({"soil_moisture." + std::to_string(i), ChannelKind::soil_moisture_cheap, -10,
                 n.moisture_cheap, Grade::cheap});
  for (int i = 1; i <= 3; ++i)
    c.push_back({"soil_temp." + std::to_string(i), ChannelKind::soil_temp, -10, n.soil_temp, Grade::cheap});
  c.push_back({"surface_flow", ChannelKind::surface_flow, 0, 0, Grade::cheap});
  if (with_reference)
    c.push_back({"soil_moisture_ref", ChannelKind::soil_moisture_ref, -10, n.moisture_ref, Grade::reference});
  return c;
}

inline SensorComplement livestock_complement() {
  return {{"gps", ChannelKind::gps, 0, 0, Grade::cheap},
          {"behavior", ChannelKind::accel_status, 0, 0, Grade::cheap}};
}

inline void validate(const SensorComplement& c) {
  std::map<std::string, int> seen;
  for (const auto& ch : c) {
    require_token(ch.id, "channel id");
    if (++seen[ch.id] > 1) throw ValidationError("duplicate channel id '" + ch.id + "'");
    if (ch.noise_sigma < 0) throw ValidationError("noise sigma must be >= 0");
  }
}

// ---------------------------------------------------------------------------
// Livestock: GPS and behaviour

struct GpsParams {
  double sigma_m = 5.0;
  Seconds delay_min_s = 30;
  Seconds delay_max_s = 60;
  double failure_prob = 0.02;
};

struct GpsFix {
  std::optional<env::GeoPoint> point;  // empty when the fix failed
  Seconds delay_s = 0;
};

inline GpsFix gps_fix(const GpsParams& g, env::GeoPoint truth, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  GpsFix fix;
  fix.delay_s = g.delay_min_s;
  if (g.delay_max_s > g.delay_min_s) {
    std::uniform_int_distribution<long> d(std::lround(g.delay_min_s), std::lround(g.delay_max_s));
    fix.delay_s = static_cast<Seconds>(d(rng));
  }
  if (g.failure_prob > 0 && u01(rng) < g.failure_prob) return fix;
  if (g.sigma_m > 0) {
    std::normal_distribution<double> n(0.0, g.sigma_m);
    const double east = n(rng);
    const double north = n(rng);
    fix.point = env::offset_meters(truth, east, north);
  } else {
    fix.point = truth;
  }
  return fix;
}

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

struct AccelStats {
  double magnitude_variance = 0;
  Vec3 mean;
};

inline AccelStats accel_stats(const std::vector<Vec3>& window) {
  if (window.empty()) throw ValidationError("accelerometer window is empty");
  AccelStats s;
  double sum_m = 0, sum_m2 = 0;
  for (const auto& v : window) {
    const double m = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    sum_m += m;
    sum_m2 += m * m;
    s.mean.x += v.x;
    s.mean.y += v.y;
    s.mean.z += v.z;
  }
  const double n = static_cast<double>(window.size());
  s.mean = {s.mean.x / n, s.mean.y / n, s.mean.z / n};
  const double mean_m = sum_m / n;
  s.magnitude_variance = std::max(0.0, sum_m2 / n - mean_m * mean_m);
  return s;
}

struct BehaviorThresholds {
  double walking_variance = 0.005;  // g^2
  double upright_cos = 0.7;         // |mean.z| / |mean| at or above this is upright
};

inline env::Behavior classify_behavior(const AccelStats& s, const BehaviorThresholds& th = {}) {
  if (s.magnitude_variance > th.walking_variance) return env::Behavior::walking;
  const double norm = std::sqrt(s.mean.x * s.mean.x + s.mean.y * s.mean.y + s.mean.z * s.mean.z);
  if (norm > 0 && std::abs(s.mean.z) / norm >= th.upright_cos) return env::Behavior::standing;
  return env::Behavior::lying;
}

// Collar accelerometer trace for a given animal state: gravity on the body
// axis set by posture, plus a vertical gait oscillation scaled by speed.
inline std::vector<Vec3> synthesize_accel(const env::SheepState& s, double noise_g, Rng& rng,
                                          std::size_t samples = 50, double rate_hz = 10.0) {
  std::normal_distribution<double> n(0.0, noise_g > 0 ? noise_g : 1.0);
  auto jitter = [&] { return noise_g > 0 ? n(rng) : 0.0; };
  std::vector<Vec3> w;
  w.reserve(samples);
  const double gait_amp = s.lying ? 0.0 : s.speed;  // g per m/s
  for (std::size_t i = 0; i < samples; ++i) {
    const double phase = 2.0 * std::numbers::pi * 2.0 * static_cast<double>(i) / rate_hz;
    Vec3 v = s.lying ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 0.0, 1.0};
    v.z += gait_amp * std::sin(phase);
    v.x += jitter();
    v.y += jitter();
    v.z += jitter();
    w.push_back(v);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Faults

struct Corrosion {
  double drift_per_day = 0;
  Seconds onset = 0;
};

struct FaultState {
  bool radio_hang = false;
  std::map<std::string, Corrosion> corrosion;  // by channel id
  bool water_ingress_dead = false;
  double condensation_fp_rate = 0;  // per surface-flow sample
};

enum class FaultKind { radio_hang, corrosion, protection_trip, water_ingress, condensation, power_cycle, repair };

inline FaultKind parse_fault_kind(std::string_view s) {
  if (s == "radio_hang") return FaultKind::radio_hang;
  if (s == "corrosion") return FaultKind::corrosion;
  if (s == "protection_trip") return FaultKind::protection_trip;
  if (s == "water_ingress") return FaultKind::water_ingress;
  if (s == "condensation") return FaultKind::condensation;
  if (s == "power_cycle") return FaultKind::power_cycle;
  if (s == "repair") return FaultKind::repair;
  throw ValidationError("unknown fault type '" + std::string(s) + "'");
}

inline const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::radio_hang: return "radio_hang";
    case FaultKind::corrosion: return "corrosion";
    case FaultKind::protection_trip: return "protection_trip";
    case FaultKind::water_ingress: return "water_ingress";
    case FaultKind::condensation: return "condensation";
    case FaultKind::power_cycle: return "power_cycle";
    case FaultKind::repair: return "repair";
  }
  return "?";
}

struct FaultSpec {
  FaultKind kind = FaultKind::radio_hang;
  std::string channel;       // corrosion
  double rate = 0;           // corrosion drift per day, or condensation probability
};

// ---------------------------------------------------------------------------
// Node state machine

struct NodeConfig {
  std::string id;
  NodeKind kind = NodeKind::soil;
  env::GeoPoint position;
  SensorComplement complement;
  PowerProfile power;
  DutyCycle duty;
  BatteryBank bank;
  GpsParams gps;
  double accel_noise_g = 0.02;
  BehaviorThresholds behavior;
};

struct NodeState {
  NodeConfig cfg;
  DutyCycle duty;  // current, possibly commanded
  BatteryBank bank;
  FaultState faults;
  std::uint64_t next_seq = 1;
  bool dormant = false;
  std::optional<Seconds> depleted_at;
  std::uint64_t suppressed_cycles = 0;

  explicit NodeState(NodeConfig c) : cfg(std::move(c)), duty(cfg.duty), bank(cfg.bank) {
    require_token(cfg.id, "node id");
    validate(cfg.power);
    validate(cfg.duty);
    validate(cfg.bank);
    validate(cfg.complement);
  }

  const std::string& id() const { return cfg.id; }
  NodeKind kind() const { return cfg.kind; }
};

// Ground truth presented to a node's sensors at one instant.
struct EnvSnapshot {
  double air_temp_c = 0;
  double air_humidity_pct = 0;
  double soil_theta = 0;
  double soil_temp_c = 0;
  bool surface_flow = false;
  env::SheepState sheep;  // livestock only
};

inline double truth_for(ChannelKind k, const EnvSnapshot& e) {
  switch (k) {
    case ChannelKind::air_temp: return e.air_temp_c;
    case ChannelKind::air_humidity: return e.air_humidity_pct;
    case ChannelKind::soil_temp: return e.soil_temp_c;
    case ChannelKind::soil_moisture_cheap:
    case ChannelKind::soil_moisture_ref: return e.soil_theta * 100.0;
    case ChannelKind::surface_flow: return e.surface_flow ? 1.0 : 0.0;
    default: return 0;
  }
}

// Samples every non-GPS channel once. The accelerometer channel reports only
// the classified behaviour label, never raw samples.
inline std::vector<Reading> sample_sensors(const NodeState& node, const EnvSnapshot& e, Seconds t, Rng& rng) {
  std::vector<Reading> out;
  out.reserve(node.cfg.complement.size());
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (const auto& ch : node.cfg.complement) {
    if (ch.kind == ChannelKind::gps) continue;
    if (ch.kind == ChannelKind::accel_status) {
      const auto window = synthesize_accel(e.sheep, node.cfg.accel_noise_g, rng);
      const auto label = classify_behavior(accel_stats(window), node.cfg.behavior);
      out.push_back({ch.id, static_cast<double>(label), unit_of(ch.kind)});
      continue;
    }
    double v = truth_for(ch.kind, e);
    if (ch.kind == ChannelKind::surface_flow) {
      const double fp = node.faults.condensation_fp_rate;
      if (v == 0.0 && fp > 0 && u01(rng) < fp) v = 1.0;
    } else {
      if (ch.noise_sigma > 0) v += ch.noise_sigma * unit_normal(rng);
      if (auto it = node.faults.corrosion.find(ch.id); it != node.faults.corrosion.end() && t >= it->second.onset)
        v += it->second.drift_per_day * (t - it->second.onset) / kDay;
    }
    out.push_back({ch.id, v, unit_of(ch.kind)});
  }
  return out;
}

inline void inject_fault(NodeState& node, const FaultSpec& f, Seconds t) {
  switch (f.kind) {
    case FaultKind::radio_hang:
      node.faults.radio_hang = true;
      break;
    case FaultKind::corrosion: {
      auto it = std::find_if(node.cfg.complement.begin(), node.cfg.complement.end(),
                             [&](const ChannelSpec& c) { return c.id == f.channel; });
      if (it == node.cfg.complement.end())
        throw NotFoundError("node " + node.id() + " has no channel '" + f.channel + "'");
      if (!is_soil_channel(it->kind))
        throw ValidationError("corrosion applies to soil channels only, not '" + f.channel + "'");
      node.faults.corrosion[f.channel] = Corrosion{f.rate, t};
      break;
    }
    case FaultKind::protection_trip:
      node.bank.protection_cut = true;
      break;
    case FaultKind::water_ingress:
      node.faults.water_ingress_dead = true;
      break;
    case FaultKind::condensation: {
      const bool has_flow = std::any_of(node.cfg.complement.begin(), node.cfg.complement.end(),
                                        [](const ChannelSpec& c) { return c.kind == ChannelKind::surface_flow; });
      if (!has_flow) throw ValidationError("condensation fault needs a surface flow channel");
      if (f.rate < 0 || f.rate > 1) throw ValidationError("condensation rate must lie in [0,1]");
      node.faults.condensation_fp_rate = f.rate;
      break;
    }
    case FaultKind::power_cycle:
      node.faults.radio_hang = false;
      break;
    case FaultKind::repair:
      node.faults = FaultState{};
      break;
  }
}

inline void apply_command(NodeState& node, const Command& c) {
  switch (c.kind) {
    case Command::Kind::set_period:
      if (c.period_s <= node.duty.awake_s) throw ValidationError("commanded period shorter than awake time");
      node.duty.sleep_s = static_cast<Seconds>(c.period_s) - node.duty.awake_s;
      break;
    case Command::Kind::power_cycle:
      node.faults.radio_hang = false;
      break;
  }
}

struct WakeResult {
  std::vector<Packet> packets;
  std::optional<Seconds> next_wake;
  std::optional<Command> applied;
  Seconds awake_s = 0;
};

// Pulls at most one pending downlink command during the listen window.
using ListenFn = std::function<std::optional<Command>(Seconds)>;

inline WakeResult wake_cycle(NodeState& node, Seconds t, const EnvSnapshot& e, Rng& rng, const ListenFn& listen) {
  WakeResult r;
  if (node.dormant || node.faults.water_ingress_dead || node.bank.available() <= 0) {
    if (!node.dormant) {
      node.dormant = true;
      if (!node.depleted_at && node.bank.available() <= 0) node.depleted_at = t;
    }
    return r;
  }

  Packet p;
  p.node_id = node.id();
  p.t = static_cast<std::int64_t>(std::floor(t));
  p.kind = node.kind();
  p.readings = sample_sensors(node, e, t, rng);

  Seconds extra_awake = 0;
  const bool has_gps = std::any_of(node.cfg.complement.begin(), node.cfg.complement.end(),
                                   [](const ChannelSpec& c) { return c.kind == ChannelKind::gps; });
  if (has_gps) {
    const GpsFix fix = gps_fix(node.cfg.gps, e.sheep.pos, rng);
    extra_awake = fix.delay_s;
    if (fix.point) {
      auto at = p.readings.begin();
      at = p.readings.insert(at, Reading{"gps.lon", fix.point->lon, "deg"});
      p.readings.insert(at, Reading{"gps.lat", fix.point->lat, "deg"});
    }
  }

  p.battery_mv = battery_mv(node.bank);
  p.period_s = static_cast<std::int64_t>(std::llround(node.duty.period()));

  if (node.faults.radio_hang) {
    ++node.suppressed_cycles;
  } else {
    p.seq = node.next_seq++;
    r.packets.push_back(std::move(p));
  }

  if (listen) {
    if (auto cmd = listen(t + node.duty.awake_s + extra_awake)) {
      apply_command(node, *cmd);
      r.applied = cmd;
    }
  }

  r.awake_s = node.duty.awake_s + extra_awake;
  const double before = node.bank.headroom();
  node.bank = consume_energy(node.bank, node.cfg.power, r.awake_s, node.duty.sleep_s);
  if (node.bank.available() <= 0) {
    // Locate the instant within this cycle at which the bank gave out.
    const double awake_draw = r.awake_s * node.cfg.power.active_mA / 3600.0;
    Seconds offset = 0;
    if (before <= awake_draw) {
      offset = before / node.cfg.power.active_mA * 3600.0;
    } else {
      offset = r.awake_s + (before - awake_draw) / node.cfg.power.sleep_mA * 3600.0;
    }
    node.depleted_at = t + std::min(offset, r.awake_s + node.duty.sleep_s);
    node.dormant = true;
    return r;
  }
  r.next_wake = t + r.awake_s + node.duty.sleep_s;
  return r;
}

}  // namespace fieldnet::node
