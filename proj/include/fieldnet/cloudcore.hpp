#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "fieldnet/core.hpp"
#include "fieldnet/environment.hpp"
#include "fieldnet/journal.hpp"
#include "fieldnet/storeforward.hpp"
#include "fieldnet/telemetry.hpp"

namespace fieldnet::cloud {

struct SensingAttribute {
  std::string channel;
  std::string kind;   // channel kind name, e.g. soil_moisture_cheap
  std::string grade;  // cheap | reference
  double mount_cm = 0;

  bool operator==(const SensingAttribute&) const = default;
};

struct NodeDescriptor {
  std::string node_id;
  NodeKind kind = NodeKind::soil;
  env::GeoPoint position;
  std::vector<SensingAttribute> sensing;
  std::set<std::string> groups;
  std::int64_t registered_t = 0;
  std::int64_t nominal_period_s = 305;
  std::string notes;

  bool operator==(const NodeDescriptor&) const = default;
};

struct NodePatch {
  std::optional<env::GeoPoint> position;
  std::optional<std::set<std::string>> groups;
  std::optional<std::string> notes;
  std::optional<std::int64_t> nominal_period_s;
  std::optional<std::vector<SensingAttribute>> sensing;
};

struct RegistryEdit {
  std::int64_t t = 0;
  NodeDescriptor snapshot;
};

struct ObservationRecord {
  PacketKey key;
  std::int64_t t = 0;
  std::string channel;
  double value = 0;
  std::string unit;
  std::string kind;

  bool operator==(const ObservationRecord&) const = default;
};

struct NodeHealth {
  std::string node_id;
  std::optional<std::int64_t> last_heard;
  std::int32_t battery_mv = 0;
  std::int64_t period_s = 0;
  bool silent = true;
};

enum class CommandStatus { staged, delivered };

struct NodeCommandStatus {
  std::string node_id;
  Command command;
  std::int64_t issued_t = 0;
  CommandStatus status = CommandStatus::staged;
  std::optional<std::int64_t> delivered_t;
};

struct GroupCommand {
  std::string group;
  std::int64_t period_s = 0;
  std::int64_t issued_t = 0;
  std::vector<std::string> fanout;  // member snapshot at issue time
};

struct CloudConfig {
  double silence_threshold = 3.0;   // missed periods before a node counts as silent
  std::int64_t min_period_s = 60;
  std::optional<env::GeoFence> site_boundary;
};

struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;

  auto operator<=>(const Triple&) const = default;
};

// ---------------------------------------------------------------------------
// Line codecs for registry records. Field order:
//   node_id kind lat lon nominal_period_s registered_t groups n_attrs
//   {channel kind grade mount_cm}* notes...
// `groups` is comma separated, "-" when empty; notes run to end of line.

inline std::string encode_descriptor(const NodeDescriptor& d) {
  std::string groups;
  for (const auto& g : d.groups) {
    if (!groups.empty()) groups += ',';
    groups += g;
  }
  if (groups.empty()) groups = "-";
  std::string out = d.node_id + ' ' + to_string(d.kind) + ' ' + format_double(d.position.lat) + ' ' +
                    format_double(d.position.lon) + ' ' + std::to_string(d.nominal_period_s) + ' ' +
                    std::to_string(d.registered_t) + ' ' + groups + ' ' + std::to_string(d.sensing.size());
  for (const auto& a : d.sensing)
    out += ' ' + a.channel + ' ' + a.kind + ' ' + a.grade + ' ' + format_double(a.mount_cm);
  if (!d.notes.empty()) out += ' ' + d.notes;
  return out;
}

inline std::set<std::string> parse_groups(std::string_view s) {
  std::set<std::string> out;
  if (s == "-" || s.empty()) return out;
  std::size_t i = 0;
  while (i <= s.size()) {
    const std::size_t j = std::min(s.find(',', i), s.size());
    if (j > i) out.emplace(s.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

// `line` must be the record with any leading op tokens already removed.
inline NodeDescriptor decode_descriptor(std::string_view line) {
  const auto tok = split_tokens(line);
  if (tok.size() < 8) throw ValidationError("node record too short");
  NodeDescriptor d;
  d.node_id = std::string(tok[0]);
  d.kind = parse_node_kind(tok[1]);
  d.position = {parse_number<double>(tok[2], "lat"), parse_number<double>(tok[3], "lon")};
  d.nominal_period_s = parse_number<std::int64_t>(tok[4], "period");
  d.registered_t = parse_number<std::int64_t>(tok[5], "registered_t");
  d.groups = parse_groups(tok[6]);
  const auto n = parse_number<std::size_t>(tok[7], "attribute count");
  if (tok.size() < 8 + 4 * n) throw ValidationError("node record attribute count mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = 8 + 4 * i;
    d.sensing.push_back({std::string(tok[b]), std::string(tok[b + 1]), std::string(tok[b + 2]),
                         parse_number<double>(tok[b + 3], "mount")});
  }
  const std::size_t used = 8 + 4 * n;
  if (tok.size() > used) {
    const auto start = static_cast<std::size_t>(tok[used].data() - line.data());
    d.notes = std::string(line.substr(start));
    while (!d.notes.empty() && (d.notes.back() == ' ' || d.notes.back() == '\r' || d.notes.back() == '\n')) d.notes.pop_back();
  }
  return d;
}

// Quotes a literal for triple serialisation.
inline std::string quote_literal(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string serialize_triples(const std::vector<Triple>& triples) {
  std::string out;
  for (const auto& t : triples) out += t.subject + ' ' + t.predicate + ' ' + t.object + '\n';
  return out;
}

// ---------------------------------------------------------------------------

// Deduplicating observation store, node registry, groups, commands and health.
// Every mutation is written to an optional append-only log and replayed on
// open. Reads take a shared lock and see a consistent snapshot.
class CloudStore {
 public:
  explicit CloudStore(CloudConfig cfg = {}, std::shared_ptr<Journal> log = Journal::in_memory())
      : cfg_(std::move(cfg)), log_(std::move(log)) {
    replay();
  }

  static std::shared_ptr<CloudStore> open(const std::filesystem::path& dir, CloudConfig cfg = {}) {
    return std::make_shared<CloudStore>(std::move(cfg), std::make_shared<Journal>(dir / "cloud.log"));
  }

  const CloudConfig& config() const { return cfg_; }

  // -- ingestion ------------------------------------------------------------

  // Every key comes back acked, duplicates and unregistered nodes included.
  std::vector<PacketKey> ingest_batch(const std::vector<Packet>& batch, std::int64_t now) {
    std::unique_lock lock(mu_);
    std::vector<PacketKey> acked;
    acked.reserve(batch.size());
    for (const auto& p : batch) {
      validate(p);
      acked.push_back(p.key());
      if (packets_.count(p.key()) || quarantine_.count(p.key())) continue;
      log("pkt " + std::to_string(now) + ' ' + encode_packet(p));
      apply_packet(p, now);
    }
    return acked;
  }

  // -- registry ---------------------------------------------------------------

  void register_node(const NodeDescriptor& d, std::int64_t now) {
    std::unique_lock lock(mu_);
    check_descriptor(d);
    if (nodes_.count(d.node_id)) throw ValidationError("node '" + d.node_id + "' already registered");
    NodeDescriptor stored = d;
    stored.registered_t = now;
    log("reg " + std::to_string(now) + ' ' + encode_descriptor(stored));
    apply_register(stored, now);
  }

  void update_node(const std::string& node_id, const NodePatch& patch, std::int64_t now) {
    std::unique_lock lock(mu_);
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) throw NotFoundError("no node '" + node_id + "'");
    NodeDescriptor d = it->second;
    if (patch.position) d.position = *patch.position;
    if (patch.groups) d.groups = *patch.groups;
    if (patch.notes) d.notes = *patch.notes;
    if (patch.nominal_period_s) d.nominal_period_s = *patch.nominal_period_s;
    if (patch.sensing) d.sensing = *patch.sensing;
    check_descriptor(d);
    log("upd " + std::to_string(now) + ' ' + encode_descriptor(d));
    apply_update(d, now);
  }

  std::optional<NodeDescriptor> node(const std::string& node_id) const {
    std::shared_lock lock(mu_);
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<NodeDescriptor> nodes() const {
    std::shared_lock lock(mu_);
    std::vector<NodeDescriptor> out;
    for (const auto& [id, d] : nodes_) out.push_back(d);
    return out;
  }

  std::vector<RegistryEdit> history(const std::string& node_id) const {
    std::shared_lock lock(mu_);
    auto it = history_.find(node_id);
    if (it == history_.end()) throw NotFoundError("no node '" + node_id + "'");
    return it->second;
  }

  std::vector<std::string> group_members(const std::string& group) const {
    std::shared_lock lock(mu_);
    return members_locked(group);
  }

  // -- commands ---------------------------------------------------------------

  GroupCommand set_group_rate(const std::string& group, std::int64_t period_s, std::int64_t now) {
    std::unique_lock lock(mu_);
    const auto members = members_locked(group);
    if (members.empty()) throw NotFoundError("group '" + group + "' is unknown or empty");
    if (period_s < cfg_.min_period_s)
      throw ValidationError("period " + std::to_string(period_s) + " s below minimum " +
                            std::to_string(cfg_.min_period_s) + " s");
    std::string line = "grp " + std::to_string(now) + ' ' + group + ' ' + std::to_string(period_s) + ' ' +
                       std::to_string(members.size());
    for (const auto& m : members) line += ' ' + m;
    log(line);
    return apply_group_command(group, period_s, now, members);
  }

  // Single-node command, e.g. a remote power cycle.
  void command_node(const std::string& node_id, const Command& c, std::int64_t now) {
    std::unique_lock lock(mu_);
    if (!nodes_.count(node_id)) throw NotFoundError("no node '" + node_id + "'");
    if (c.kind == Command::Kind::set_period && c.period_s < cfg_.min_period_s)
      throw ValidationError("period below minimum");
    log("cmd " + std::to_string(now) + ' ' + node_id + ' ' +
        (c.kind == Command::Kind::power_cycle ? "power_cycle" : "set_period") + ' ' + std::to_string(c.period_s));
    apply_node_command(node_id, c, now);
  }

  // Commands not yet handed to the gateway. The gateway takes them at its
  // next cloud session.
  std::vector<sf::CommandEntry> drain_outbox(std::int64_t now) {
    std::unique_lock lock(mu_);
    if (outbox_.empty()) return {};
    log("drain " + std::to_string(now));
    std::vector<sf::CommandEntry> out;
    out.swap(outbox_);
    return out;
  }

  std::vector<GroupCommand> group_commands(const std::string& group) const {
    std::shared_lock lock(mu_);
    std::vector<GroupCommand> out;
    for (const auto& g : group_commands_)
      if (g.group == group) out.push_back(g);
    return out;
  }

  std::vector<NodeCommandStatus> command_status(const std::string& node_id) const {
    std::shared_lock lock(mu_);
    auto it = command_status_.find(node_id);
    if (it == command_status_.end()) return {};
    return it->second;
  }

  // -- health -----------------------------------------------------------------

  NodeHealth node_health(const std::string& node_id, std::int64_t now) const {
    std::shared_lock lock(mu_);
    if (!nodes_.count(node_id)) throw NotFoundError("no node '" + node_id + "'");
    return health_locked(node_id, now);
  }

  std::vector<NodeHealth> silent_nodes(std::int64_t now) const {
    std::shared_lock lock(mu_);
    std::vector<NodeHealth> out;
    for (const auto& [id, d] : nodes_) {
      auto h = health_locked(id, now);
      if (h.silent) out.push_back(std::move(h));
    }
    return out;
  }

  // -- queries ----------------------------------------------------------------

  std::vector<std::pair<std::int64_t, double>> query_series(const std::string& node_id, const std::string& channel,
                                                            std::int64_t t_from, std::int64_t t_to) const {
    std::shared_lock lock(mu_);
    if (t_from > t_to) throw ValidationError("query range requires from <= to");
    if (!nodes_.count(node_id)) throw NotFoundError("no node '" + node_id + "'");
    auto it = series_.find({node_id, channel});
    if (it == series_.end()) {
      if (!declares_channel(nodes_.at(node_id), channel))
        throw NotFoundError("node '" + node_id + "' has no channel '" + channel + "'");
      return {};
    }
    std::vector<std::pair<std::int64_t, double>> out;
    const auto& s = it->second;
    for (auto jt = s.lower_bound({t_from, 0}); jt != s.end() && jt->first.first <= t_to; ++jt)
      out.emplace_back(jt->first.first, jt->second);
    return out;
  }

  std::vector<ObservationRecord> records_for(const PacketKey& key) const {
    std::shared_lock lock(mu_);
    auto it = packets_.find(key);
    if (it == packets_.end()) throw NotFoundError("no record " + to_string(key));
    return explode(it->second.packet);
  }

  std::vector<Triple> export_semantic(const PacketKey& key) const {
    std::shared_lock lock(mu_);
    auto it = packets_.find(key);
    if (it == packets_.end()) throw NotFoundError("no record " + to_string(key));
    const Packet& p = it->second.packet;
    const NodeDescriptor* d = nullptr;
    if (auto nt = nodes_.find(p.node_id); nt != nodes_.end()) d = &nt->second;

    std::vector<Triple> out;
    const std::string base = p.node_id + '/' + std::to_string(p.seq) + '/';
    for (const auto& r : p.readings) {
      const std::string obs = "<obs:" + base + r.channel + '>';
      const std::string res = "<result:" + base + r.channel + '>';
      const std::string sensor = "<sensor:" + p.node_id + '/' + r.channel + '>';
      const SensingAttribute* attr = d ? find_attribute(*d, r.channel) : nullptr;
      out.push_back({obs, "rdf:type", "sosa:Observation"});
      out.push_back({obs, "sosa:madeBySensor", sensor});
      out.push_back({sensor, "fieldnet:channelKind", quote_literal(attr ? attr->kind : "unknown")});
      out.push_back({sensor, "fieldnet:grade", quote_literal(attr ? attr->grade : "unknown")});
      out.push_back({obs, "sosa:hasResult", res});
      out.push_back({res, "qudt:numericValue", quote_literal(format_double(r.value))});
      out.push_back({res, "qudt:unit", quote_literal(r.unit)});
      out.push_back({obs, "sosa:resultTime", quote_literal(std::to_string(p.t))});
      if (d)
        out.push_back({obs, "geo:location",
                       quote_literal(format_double(d->position.lat) + ' ' + format_double(d->position.lon))});
    }
    return out;
  }

  // -- inspection, mostly for reports and tests --------------------------------

  struct StoredPacket {
    Packet packet;
    std::int64_t stored_t = 0;
  };

  std::map<PacketKey, StoredPacket> packets() const {
    std::shared_lock lock(mu_);
    return packets_;
  }

  std::map<PacketKey, StoredPacket> quarantined() const {
    std::shared_lock lock(mu_);
    return quarantine_;
  }

  std::size_t quarantine_count() const {
    std::shared_lock lock(mu_);
    return quarantine_.size();
  }

  std::size_t packet_count() const {
    std::shared_lock lock(mu_);
    return packets_.size();
  }

  // Canonical dump of observations (packets with their readings), without
  // receipt times. Equal dumps mean equal stored data.
  std::string observation_dump() const {
    std::shared_lock lock(mu_);
    std::string s;
    for (const auto& [k, sp] : packets_) s += encode_packet(sp.packet) + '\n';
    for (const auto& [k, sp] : quarantine_) s += "q " + encode_packet(sp.packet) + '\n';
    return s;
  }

 private:
  struct Health {
    std::optional<std::int64_t> last_heard;
    std::int64_t newest_t = 0;
    std::int32_t battery_mv = 0;
    std::int64_t reported_period_s = 0;
  };

  void log(const std::string& line) {
    if (!replaying_) log_->append(line);
  }

  void check_descriptor(const NodeDescriptor& d) const {
    require_token(d.node_id, "node id");
    for (const auto& g : d.groups) {
      require_token(g, "group name");
      if (g.find(',') != std::string::npos) throw ValidationError("group names may not contain ','");
    }
    for (const auto& a : d.sensing) {
      require_token(a.channel, "channel id");
      require_token(a.kind, "channel kind");
      require_token(a.grade, "grade");
    }
    if (d.notes.find('\n') != std::string::npos) throw ValidationError("notes may not contain newlines");
    if (d.nominal_period_s <= 0) throw ValidationError("nominal period must be > 0");
    if (d.position.lat < -90 || d.position.lat > 90 || d.position.lon < -180 || d.position.lon > 180)
      throw ValidationError("position outside lat/lon range");
    if (cfg_.site_boundary && !cfg_.site_boundary->contains(d.position))
      throw ValidationError("position outside the site boundary");
  }

  static const SensingAttribute* find_attribute(const NodeDescriptor& d, const std::string& channel) {
    for (const auto& a : d.sensing)
      if (a.channel == channel) return &a;
    const auto dot = channel.find('.');
    if (dot != std::string::npos) {
      const auto prefix = channel.substr(0, dot);
      for (const auto& a : d.sensing)
        if (a.channel == prefix) return &a;
    }
    return nullptr;
  }

  static bool declares_channel(const NodeDescriptor& d, const std::string& channel) {
    return find_attribute(d, channel) != nullptr;
  }

  std::vector<ObservationRecord> explode(const Packet& p) const {
    std::vector<ObservationRecord> out;
    const NodeDescriptor* d = nullptr;
    if (auto nt = nodes_.find(p.node_id); nt != nodes_.end()) d = &nt->second;
    for (const auto& r : p.readings) {
      const SensingAttribute* a = d ? find_attribute(*d, r.channel) : nullptr;
      out.push_back({p.key(), p.t, r.channel, r.value, r.unit, a ? a->kind : "unknown"});
    }
    return out;
  }

  std::vector<std::string> members_locked(const std::string& group) const {
    std::vector<std::string> out;
    for (const auto& [id, d] : nodes_)
      if (d.groups.count(group)) out.push_back(id);
    return out;
  }

  NodeHealth health_locked(const std::string& node_id, std::int64_t now) const {
    NodeHealth h;
    h.node_id = node_id;
    const auto& d = nodes_.at(node_id);
    std::int64_t period = d.nominal_period_s;
    if (auto it = health_.find(node_id); it != health_.end()) {
      h.last_heard = it->second.last_heard;
      h.battery_mv = it->second.battery_mv;
      if (it->second.reported_period_s > 0) period = it->second.reported_period_s;
    }
    // A commanded period still on its way to the node already governs silence.
    if (auto it = command_status_.find(node_id); it != command_status_.end()) {
      for (const auto& c : it->second)
        if (c.status == CommandStatus::staged && c.command.kind == Command::Kind::set_period)
          period = std::max(period, c.command.period_s);
    }
    h.period_s = period;
    // A node never heard from is measured from its registration.
    const std::int64_t since = h.last_heard ? *h.last_heard : d.registered_t;
    h.silent = static_cast<double>(now - since) > cfg_.silence_threshold * static_cast<double>(period);
    return h;
  }

  void apply_packet(const Packet& p, std::int64_t now) {
    if (!nodes_.count(p.node_id)) {
      quarantine_.emplace(p.key(), StoredPacket{p, now});
      return;
    }
    index_packet(p, now);
  }

  void index_packet(const Packet& p, std::int64_t now) {
    packets_.emplace(p.key(), StoredPacket{p, now});
    for (const auto& r : p.readings) series_[{p.node_id, r.channel}].emplace(std::pair{p.t, p.seq}, r.value);

    auto& h = health_[p.node_id];
    if (!h.last_heard || p.t >= *h.last_heard) {
      h.last_heard = p.t;
      h.newest_t = p.t;
      h.battery_mv = p.battery_mv;
      h.reported_period_s = p.period_s;
    }

    if (auto it = command_status_.find(p.node_id); it != command_status_.end()) {
      for (auto& c : it->second) {
        if (c.status != CommandStatus::staged || p.t <= c.issued_t) continue;
        const bool confirmed = c.command.kind == Command::Kind::power_cycle || p.period_s == c.command.period_s;
        if (confirmed) {
          c.status = CommandStatus::delivered;
          c.delivered_t = p.t;
        }
      }
    }
  }

  void apply_register(const NodeDescriptor& d, std::int64_t now) {
    nodes_[d.node_id] = d;
    history_[d.node_id] = {RegistryEdit{now, d}};
    // Data that arrived before registration leaves quarantine.
    std::vector<PacketKey> promote;
    for (const auto& [k, sp] : quarantine_)
      if (k.node_id == d.node_id) promote.push_back(k);
    for (const auto& k : promote) {
      auto sp = quarantine_.at(k);
      quarantine_.erase(k);
      index_packet(sp.packet, sp.stored_t);
    }
  }

  void apply_update(const NodeDescriptor& d, std::int64_t now) {
    nodes_[d.node_id] = d;
    history_[d.node_id].push_back(RegistryEdit{now, d});
  }

  void stage(const std::string& node_id, const Command& c, std::int64_t now) {
    auto& list = command_status_[node_id];
    // Newest wins: an older staged command will never reach the node.
    list.erase(std::remove_if(list.begin(), list.end(),
                              [](const NodeCommandStatus& s) { return s.status == CommandStatus::staged; }),
               list.end());
    list.push_back({node_id, c, now, CommandStatus::staged, std::nullopt});
    outbox_.push_back({node_id, c, static_cast<Seconds>(now), false});
  }

  GroupCommand apply_group_command(const std::string& group, std::int64_t period_s, std::int64_t now,
                                   const std::vector<std::string>& members) {
    GroupCommand g{group, period_s, now, members};
    for (const auto& m : members) stage(m, Command{Command::Kind::set_period, period_s}, now);
    group_commands_.push_back(g);
    return g;
  }

  void apply_node_command(const std::string& node_id, const Command& c, std::int64_t now) { stage(node_id, c, now); }

  void replay() {
    replaying_ = true;
    for (const auto& line : log_->read_all()) {
      const auto tok = split_tokens(line);
      if (tok.size() < 2) throw ValidationError("cloud log: malformed record '" + line + "'");
      const auto op = tok[0];
      const auto now = parse_number<std::int64_t>(tok[1], "time");
      const auto rest_at = [&](std::size_t i) {
        return std::string_view(line).substr(static_cast<std::size_t>(tok.at(i).data() - line.data()));
      };
      if (op == "pkt") {
        Packet p = decode_packet(tok, 2);
        if (!packets_.count(p.key()) && !quarantine_.count(p.key())) apply_packet(p, now);
      } else if (op == "reg") {
        apply_register(decode_descriptor(rest_at(2)), now);
      } else if (op == "upd") {
        apply_update(decode_descriptor(rest_at(2)), now);
      } else if (op == "grp") {
        const std::string group(tok.at(2));
        const auto period = parse_number<std::int64_t>(tok.at(3), "period");
        const auto n = parse_number<std::size_t>(tok.at(4), "member count");
        std::vector<std::string> members;
        for (std::size_t i = 0; i < n; ++i) members.emplace_back(tok.at(5 + i));
        apply_group_command(group, period, now, members);
      } else if (op == "cmd") {
        Command c;
        c.kind = tok.at(3) == "power_cycle" ? Command::Kind::power_cycle : Command::Kind::set_period;
        c.period_s = parse_number<std::int64_t>(tok.at(4), "period");
        apply_node_command(std::string(tok.at(2)), c, now);
      } else if (op == "drain") {
        outbox_.clear();
      } else {
        throw ValidationError("cloud log: unknown record '" + std::string(op) + "'");
      }
    }
    replaying_ = false;
  }

  CloudConfig cfg_;
  std::shared_ptr<Journal> log_;
  mutable std::shared_mutex mu_;
  bool replaying_ = false;

  std::map<std::string, NodeDescriptor> nodes_;
  std::map<std::string, std::vector<RegistryEdit>> history_;
  std::map<PacketKey, StoredPacket> packets_;
  std::map<PacketKey, StoredPacket> quarantine_;
  // (node, channel) -> (t, seq) -> value
  std::map<std::pair<std::string, std::string>, std::map<std::pair<std::int64_t, std::uint64_t>, double>> series_;
  std::map<std::string, Health> health_;
  std::map<std::string, std::vector<NodeCommandStatus>> command_status_;
  std::vector<GroupCommand> group_commands_;
  std::vector<sf::CommandEntry> outbox_;
};

}  // namespace fieldnet::cloud
