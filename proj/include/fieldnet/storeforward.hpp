#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fieldnet/core.hpp"
#include "fieldnet/journal.hpp"
#include "fieldnet/telemetry.hpp"

namespace fieldnet::sf {

enum class EntryState { pending, awaiting_ack, acked };

inline const char* to_string(EntryState s) {
  switch (s) {
    case EntryState::pending: return "pending";
    case EntryState::awaiting_ack: return "awaiting";
    case EntryState::acked: return "acked";
  }
  return "?";
}

struct DurableEntry {
  Packet packet;
  EntryState state = EntryState::pending;
  Seconds last_sent = 0;
  std::uint32_t attempts = 0;
  std::uint64_t order = 0;  // ingest order, for oldest-first eviction
  Seconds stored_t = 0;

  PacketKey key() const { return packet.key(); }
};

struct CommandEntry {
  std::string node_id;
  Command command;
  Seconds issued_t = 0;
  bool delivered = false;
};

inline std::string encode_command_fields(const CommandEntry& c) {
  return c.node_id + ' ' + format_double(c.issued_t) + ' ' +
         (c.command.kind == Command::Kind::power_cycle ? "power_cycle" : "set_period") + ' ' +
         std::to_string(c.command.period_s);
}

inline CommandEntry decode_command_fields(const std::vector<std::string_view>& tok, std::size_t first) {
  if (tok.size() < first + 4) throw ValidationError("command record too short");
  CommandEntry c;
  c.node_id = std::string(tok[first]);
  c.issued_t = parse_number<double>(tok[first + 1], "issued time");
  if (tok[first + 2] == "power_cycle") c.command.kind = Command::Kind::power_cycle;
  else if (tok[first + 2] == "set_period") c.command.kind = Command::Kind::set_period;
  else throw ValidationError("unknown command '" + std::string(tok[first + 2]) + "'");
  c.command.period_s = parse_number<std::int64_t>(tok[first + 3], "period");
  return c;
}

inline std::string key_fields(const PacketKey& k) { return k.node_id + ' ' + std::to_string(k.seq); }

inline PacketKey decode_key(const std::vector<std::string_view>& tok, std::size_t first) {
  if (tok.size() < first + 2) throw ValidationError("key record too short");
  return {std::string(tok[first]), parse_number<std::uint64_t>(tok[first + 1], "seq")};
}

// ---------------------------------------------------------------------------
// Relay: durable ack'd queue towards the gateway, plus downlink staging.

struct RelayConfig {
  std::size_t capacity = 20000;
  Seconds retry_timeout = 60;
  std::size_t batch_limit = 64;
};

class Relay {
 public:
  // Rebuilds state by replaying `journal`; an empty journal is a fresh relay.
  Relay(RelayConfig cfg, std::shared_ptr<Journal> journal, std::set<std::string> known_nodes)
      : cfg_(cfg), journal_(std::move(journal)), known_(std::move(known_nodes)) {
    if (cfg_.capacity == 0) throw ValidationError("relay capacity must be > 0");
    if (cfg_.batch_limit == 0) throw ValidationError("relay batch limit must be > 0");
    replay();
  }

  // Returns false for a duplicate key. At capacity, evicts the oldest acked
  // entry, or failing that the oldest unacked one (counted as data loss).
  bool ingest(const Packet& p, Seconds t) {
    const PacketKey k = p.key();
    if (entries_.count(k)) return false;
    if (entries_.size() >= cfg_.capacity) {
      const auto& pool = acked_by_order_.empty() ? unacked_by_order_ : acked_by_order_;
      const PacketKey victim = pool.begin()->second;
      const bool lost = acked_by_order_.empty();
      log("evict " + key_fields(victim) + (lost ? " 1" : " 0"));
      apply_evict(victim, lost);
    }
    const std::uint64_t order = next_order_;
    log("ingest " + std::to_string(order) + ' ' + format_double(t) + ' ' + encode_packet(p));
    apply_ingest(p, order, t);
    return true;
  }

  // Up to batch_limit entries due for (re)transmission, in key order.
  std::vector<Packet> flush(Seconds t) {
    std::vector<Packet> out;
    for (const auto& key : open_) {
      if (out.size() >= cfg_.batch_limit) break;
      const auto& e = entries_.at(key);
      const bool due = e.state == EntryState::pending ||
                       (e.state == EntryState::awaiting_ack && e.last_sent + cfg_.retry_timeout <= t);
      if (!due) continue;
      log("sent " + key_fields(key) + ' ' + format_double(t));
      apply_sent(key, t);
      out.push_back(e.packet);
    }
    return out;
  }

  void handle_ack(const Ack& a) {
    for (const auto& k : a.keys) {
      auto it = entries_.find(k);
      if (it == entries_.end() || it->second.state == EntryState::acked) continue;
      log("ack " + key_fields(k));
      apply_ack(k);
    }
  }

  void stage_command(const CommandEntry& c) {
    if (!known_.count(c.node_id)) throw NotFoundError("relay has no node '" + c.node_id + "'");
    log("cmd " + encode_command_fields(c));
    apply_command(c);
  }

  // The command waiting for `node_id`, if any and not yet delivered.
  std::optional<CommandEntry> pending_command(const std::string& node_id) const {
    auto it = commands_.find(node_id);
    if (it == commands_.end() || it->second.delivered) return std::nullopt;
    return it->second;
  }

  void mark_delivered(const std::string& node_id, Seconds issued_t) {
    auto it = commands_.find(node_id);
    if (it == commands_.end() || it->second.delivered || it->second.issued_t != issued_t) return;
    log("cmddone " + node_id + ' ' + format_double(issued_t));
    it->second.delivered = true;
  }

  const std::map<PacketKey, DurableEntry>& entries() const { return entries_; }
  const DurableEntry* find(const PacketKey& k) const {
    auto it = entries_.find(k);
    return it == entries_.end() ? nullptr : &it->second;
  }
  std::size_t unacked() const { return unacked_by_order_.size(); }
  std::uint64_t data_loss() const { return data_loss_; }
  const std::set<PacketKey>& evicted_unacked() const { return evicted_unacked_; }
  const std::map<std::string, CommandEntry>& commands() const { return commands_; }
  const RelayConfig& config() const { return cfg_; }

  // Canonical dump of the durable state; equal dumps mean equal state.
  std::string state_dump() const {
    std::string s;
    for (const auto& [k, e] : entries_) {
      s += key_fields(k) + ' ' + to_string(e.state) + ' ' + format_double(e.last_sent) + ' ' +
           std::to_string(e.attempts) + ' ' + std::to_string(e.order) + '\n';
    }
    for (const auto& k : evicted_unacked_) s += "evicted " + key_fields(k) + '\n';
    for (const auto& [n, c] : commands_) s += "cmd " + encode_command_fields(c) + (c.delivered ? " 1\n" : " 0\n");
    s += "loss " + std::to_string(data_loss_) + '\n';
    return s;
  }

 private:
  void log(const std::string& line) {
    if (!replaying_) journal_->append(line);
  }

  void apply_ingest(const Packet& p, std::uint64_t order, Seconds t) {
    DurableEntry e;
    e.packet = p;
    e.order = order;
    e.stored_t = t;
    next_order_ = std::max(next_order_, order + 1);
    unacked_by_order_.emplace(order, p.key());
    open_.insert(p.key());
    entries_.emplace(p.key(), std::move(e));
  }

  void apply_evict(const PacketKey& k, bool lost) {
    auto it = entries_.find(k);
    if (it == entries_.end()) return;
    if (it->second.state == EntryState::acked) acked_by_order_.erase(it->second.order);
    else unacked_by_order_.erase(it->second.order);
    open_.erase(k);
    if (lost) {
      ++data_loss_;
      evicted_unacked_.insert(k);
    }
    entries_.erase(it);
  }

  void apply_sent(const PacketKey& k, Seconds t) {
    auto& e = entries_.at(k);
    e.state = EntryState::awaiting_ack;
    e.last_sent = t;
    ++e.attempts;
  }

  void apply_ack(const PacketKey& k) {
    auto& e = entries_.at(k);
    if (e.state == EntryState::acked) return;
    e.state = EntryState::acked;
    unacked_by_order_.erase(e.order);
    open_.erase(k);
    acked_by_order_.emplace(e.order, k);
  }

  void apply_command(const CommandEntry& c) {
    CommandEntry stored = c;
    stored.delivered = false;
    commands_[c.node_id] = stored;
  }

  void replay() {
    replaying_ = true;
    for (const auto& line : journal_->read_all()) {
      const auto tok = split_tokens(line);
      if (tok.empty()) continue;
      const auto op = tok[0];
      if (op == "ingest") {
        const auto order = parse_number<std::uint64_t>(tok.at(1), "order");
        const auto t = parse_number<double>(tok.at(2), "time");
        apply_ingest(decode_packet(tok, 3), order, t);
      } else if (op == "sent") {
        apply_sent(decode_key(tok, 1), parse_number<double>(tok.at(3), "time"));
      } else if (op == "ack") {
        apply_ack(decode_key(tok, 1));
      } else if (op == "evict") {
        apply_evict(decode_key(tok, 1), tok.at(3) == "1");
      } else if (op == "cmd") {
        apply_command(decode_command_fields(tok, 1));
      } else if (op == "cmddone") {
        auto it = commands_.find(std::string(tok.at(1)));
        if (it != commands_.end() && it->second.issued_t == parse_number<double>(tok.at(2), "time"))
          it->second.delivered = true;
      } else {
        throw ValidationError("relay journal: unknown record '" + std::string(op) + "'");
      }
    }
    replaying_ = false;
  }

  RelayConfig cfg_;
  std::shared_ptr<Journal> journal_;
  std::set<std::string> known_;
  std::map<PacketKey, DurableEntry> entries_;
  std::map<std::uint64_t, PacketKey> acked_by_order_;
  std::map<std::uint64_t, PacketKey> unacked_by_order_;
  std::set<PacketKey> open_;  // not yet acked, in key order
  std::set<PacketKey> evicted_unacked_;
  std::map<std::string, CommandEntry> commands_;
  std::uint64_t next_order_ = 0;
  std::uint64_t data_loss_ = 0;
  bool replaying_ = false;
};

// ---------------------------------------------------------------------------
// Gateway: idempotent durable store, batched upload to the cloud, and the
// outbound command list towards the relay.

enum class CloudState { pending, awaiting_cloud_ack, cloud_acked };

struct GatewayRecord {
  Packet packet;
  CloudState state = CloudState::pending;
  Seconds stored_t = 0;
  Seconds last_upload = 0;
  std::uint32_t uploads = 0;
};

struct GatewayConfig {
  std::size_t upload_batch = 500;
  Seconds cloud_retry_timeout = 60;
};

class Gateway {
 public:
  Gateway(GatewayConfig cfg, std::shared_ptr<Journal> journal) : cfg_(cfg), journal_(std::move(journal)) {
    if (cfg_.upload_batch == 0) throw ValidationError("gateway upload batch must be > 0");
    replay();
  }

  // Always acks, duplicates included, so the relay can prune.
  Ack ingest(const Packet& p, Seconds t) {
    const PacketKey k = p.key();
    if (!records_.count(k)) {
      log("store " + format_double(t) + ' ' + encode_packet(p));
      apply_store(p, t);
    } else {
      ++duplicates_;
    }
    return Ack{{k}};
  }

  std::vector<Packet> upload(Seconds t, bool uplink_available) {
    std::vector<Packet> out;
    if (!uplink_available) return out;
    for (const auto& k : open_) {
      if (out.size() >= cfg_.upload_batch) break;
      const auto& r = records_.at(k);
      const bool due = r.state == CloudState::pending ||
                       (r.state == CloudState::awaiting_cloud_ack && r.last_upload + cfg_.cloud_retry_timeout <= t);
      if (!due) continue;
      log("up " + key_fields(k) + ' ' + format_double(t));
      apply_upload(k, t);
      out.push_back(r.packet);
    }
    return out;
  }

  void handle_cloud_ack(const std::vector<PacketKey>& keys) {
    for (const auto& k : keys) {
      auto it = records_.find(k);
      if (it == records_.end() || it->second.state == CloudState::cloud_acked) continue;
      log("cack " + key_fields(k));
      apply_cloud_ack(k);
    }
  }

  void queue_command(const CommandEntry& c) {
    log("ocmd " + encode_command_fields(c));
    outbound_[c.node_id] = c;
  }

  std::vector<CommandEntry> outbound_commands() const {
    std::vector<CommandEntry> v;
    for (const auto& [n, c] : outbound_) v.push_back(c);
    return v;
  }

  void mark_forwarded(const std::string& node_id, Seconds issued_t) {
    auto it = outbound_.find(node_id);
    if (it == outbound_.end() || it->second.issued_t != issued_t) return;
    log("ocmddone " + node_id + ' ' + format_double(issued_t));
    outbound_.erase(it);
  }

  const std::map<PacketKey, GatewayRecord>& records() const { return records_; }
  std::size_t not_cloud_acked() const { return open_.size(); }
  std::uint64_t duplicates() const { return duplicates_; }

  std::string state_dump() const {
    std::string s;
    for (const auto& [k, r] : records_) {
      s += key_fields(k) + ' ' + std::to_string(static_cast<int>(r.state)) + ' ' + format_double(r.last_upload) +
           ' ' + std::to_string(r.uploads) + '\n';
    }
    for (const auto& [n, c] : outbound_) s += "ocmd " + encode_command_fields(c) + '\n';
    return s;
  }

 private:
  void log(const std::string& line) {
    if (!replaying_) journal_->append(line);
  }

  void apply_store(const Packet& p, Seconds t) {
    GatewayRecord r;
    r.packet = p;
    r.stored_t = t;
    records_.emplace(p.key(), std::move(r));
    open_.insert(p.key());
  }

  void apply_upload(const PacketKey& k, Seconds t) {
    auto& r = records_.at(k);
    r.state = CloudState::awaiting_cloud_ack;
    r.last_upload = t;
    ++r.uploads;
  }

  void apply_cloud_ack(const PacketKey& k) {
    auto& r = records_.at(k);
    if (r.state == CloudState::cloud_acked) return;
    r.state = CloudState::cloud_acked;
    open_.erase(k);
  }

  void replay() {
    replaying_ = true;
    for (const auto& line : journal_->read_all()) {
      const auto tok = split_tokens(line);
      if (tok.empty()) continue;
      const auto op = tok[0];
      if (op == "store") {
        apply_store(decode_packet(tok, 2), parse_number<double>(tok.at(1), "time"));
      } else if (op == "up") {
        apply_upload(decode_key(tok, 1), parse_number<double>(tok.at(3), "time"));
      } else if (op == "cack") {
        apply_cloud_ack(decode_key(tok, 1));
      } else if (op == "ocmd") {
        auto c = decode_command_fields(tok, 1);
        outbound_[c.node_id] = c;
      } else if (op == "ocmddone") {
        auto it = outbound_.find(std::string(tok.at(1)));
        if (it != outbound_.end() && it->second.issued_t == parse_number<double>(tok.at(2), "time"))
          outbound_.erase(it);
      } else {
        throw ValidationError("gateway journal: unknown record '" + std::string(op) + "'");
      }
    }
    replaying_ = false;
  }

  GatewayConfig cfg_;
  std::shared_ptr<Journal> journal_;
  std::map<PacketKey, GatewayRecord> records_;
  std::map<std::string, CommandEntry> outbound_;
  std::set<PacketKey> open_;  // not yet cloud-acked
  std::uint64_t duplicates_ = 0;
  bool replaying_ = false;
};

}  // namespace fieldnet::sf
