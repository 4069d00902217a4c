#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fieldnet/core.hpp"

namespace fieldnet {

enum class NodeKind { soil, livestock };

inline const char* to_string(NodeKind k) { return k == NodeKind::soil ? "soil" : "livestock"; }

inline NodeKind parse_node_kind(std::string_view s) {
  if (s == "soil") return NodeKind::soil;
  if (s == "livestock") return NodeKind::livestock;
  throw ValidationError("unknown node kind '" + std::string(s) + "'");
}

// Identity of one transmission; survives retransmission at every hop.
struct PacketKey {
  std::string node_id;
  std::uint64_t seq = 0;

  auto operator<=>(const PacketKey&) const = default;
  bool operator==(const PacketKey&) const = default;
};

inline std::string to_string(const PacketKey& k) { return k.node_id + "#" + std::to_string(k.seq); }

struct Reading {
  std::string channel;
  double value = 0;
  std::string unit;

  bool operator==(const Reading&) const = default;
};

struct Packet {
  std::string node_id;
  std::uint64_t seq = 0;
  std::int64_t t = 0;
  NodeKind kind = NodeKind::soil;
  std::vector<Reading> readings;
  std::int32_t battery_mv = 0;
  std::int64_t period_s = 0;  // the duty period the node was running when it sent this

  PacketKey key() const { return {node_id, seq}; }
  bool operator==(const Packet&) const = default;
};

struct Command {
  enum class Kind { set_period, power_cycle };
  Kind kind = Kind::set_period;
  std::int64_t period_s = 0;

  bool operator==(const Command&) const = default;
};

inline std::string to_string(const Command& c) {
  return c.kind == Command::Kind::power_cycle ? std::string("power_cycle")
                                              : "set_period " + std::to_string(c.period_s);
}

// Receipt for packets, sent back over the hop they arrived on.
struct Ack {
  std::vector<PacketKey> keys;

  bool operator==(const Ack&) const = default;
};

// ---------------------------------------------------------------------------
// Text codec shared by the journals, the cloud store log and the HTTP API.
// A record is one line of whitespace-separated tokens; identifiers therefore
// must not contain whitespace.

inline bool is_token(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return false;
  }
  return true;
}

inline void require_token(std::string_view s, const char* what) {
  if (!is_token(s)) throw ValidationError(std::string(what) + " must be non-empty without whitespace");
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view s, const char* what) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ValidationError(std::string("bad ") + what + " '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Packet line, field order:
//   node_id seq t kind battery_mv period_s n_readings {channel value unit}*
inline std::string encode_packet(const Packet& p) {
  std::string out;
  out.reserve(64 + p.readings.size() * 32);
  out += p.node_id;
  out += ' ';
  out += std::to_string(p.seq);
  out += ' ';
  out += std::to_string(p.t);
  out += ' ';
  out += to_string(p.kind);
  out += ' ';
  out += std::to_string(p.battery_mv);
  out += ' ';
  out += std::to_string(p.period_s);
  out += ' ';
  out += std::to_string(p.readings.size());
  for (const auto& r : p.readings) {
    out += ' ';
    out += r.channel;
    out += ' ';
    out += format_double(r.value);
    out += ' ';
    out += r.unit;
  }
  return out;
}

// Decodes tokens [first, ...) of an already split line.
inline Packet decode_packet(const std::vector<std::string_view>& tok, std::size_t first = 0) {
  if (tok.size() < first + 7) throw ValidationError("packet record too short");
  Packet p;
  p.node_id = std::string(tok[first]);
  p.seq = parse_number<std::uint64_t>(tok[first + 1], "seq");
  p.t = parse_number<std::int64_t>(tok[first + 2], "timestamp");
  p.kind = parse_node_kind(tok[first + 3]);
  p.battery_mv = parse_number<std::int32_t>(tok[first + 4], "battery_mv");
  p.period_s = parse_number<std::int64_t>(tok[first + 5], "period_s");
  const auto n = parse_number<std::size_t>(tok[first + 6], "reading count");
  if (tok.size() != first + 7 + 3 * n) throw ValidationError("packet reading count mismatch");
  p.readings.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = first + 7 + 3 * i;
    p.readings.push_back(
        {std::string(tok[b]), parse_number<double>(tok[b + 1], "reading value"), std::string(tok[b + 2])});
  }
  return p;
}

inline Packet decode_packet(std::string_view line) { return decode_packet(split_tokens(line)); }

inline void validate(const Packet& p) {
  require_token(p.node_id, "node id");
  for (const auto& r : p.readings) {
    require_token(r.channel, "channel id");
    require_token(r.unit, "unit");
  }
}

}  // namespace fieldnet
