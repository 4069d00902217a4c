#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fieldnet/core.hpp"
#include "fieldnet/simkernel.hpp"
#include "fieldnet/telemetry.hpp"

namespace fieldnet::radio {

enum class LinkClass { short_range, long_range, uplink };

inline const char* to_string(LinkClass c) {
  switch (c) {
    case LinkClass::short_range: return "short";
    case LinkClass::long_range: return "long";
    case LinkClass::uplink: return "uplink";
  }
  return "?";
}

struct Window {
  Seconds start = 0;
  Seconds end = 0;

  // Half-open: [start, end).
  bool contains(Seconds t) const { return t >= start && t < end; }
};

struct LinkSpec {
  LinkClass cls = LinkClass::short_range;
  double loss_prob = 0;
  std::vector<Window> outages;
  Seconds latency_s = 0.1;
};

inline void validate(const Window& w) {
  if (!(w.start < w.end)) throw ValidationError("outage window requires start < end");
}

inline void validate(const LinkSpec& s) {
  if (s.loss_prob < 0 || s.loss_prob > 1) throw ValidationError("loss probability must lie in [0,1]");
  if (s.latency_s < 0) throw ValidationError("latency must be >= 0");
  for (const auto& w : s.outages) validate(w);
}

inline LinkSpec default_spec(LinkClass c) {
  LinkSpec s;
  s.cls = c;
  s.latency_s = c == LinkClass::short_range ? 0.1 : 0.5;
  return s;
}

struct CommandFrame {
  std::string node_id;
  Command command;
  Seconds issued_t = 0;
};

struct Frame {
  std::string src;
  std::string dst;
  std::variant<Packet, Ack, CommandFrame> body;
  Seconds t_sent = 0;
};

inline const char* body_label(const Frame& f) {
  switch (f.body.index()) {
    case 0: return "packet";
    case 1: return "ack";
    default: return "command";
  }
}

class Link {
 public:
  Link(std::string id, std::string a, std::string b, LinkSpec spec)
      : id_(std::move(id)), a_(std::move(a)), b_(std::move(b)), spec_(std::move(spec)) {
    validate(spec_);
  }

  const std::string& id() const { return id_; }
  const LinkSpec& spec() const { return spec_; }
  LinkSpec& spec() { return spec_; }
  bool connects(const std::string& x, const std::string& y) const {
    return (x == a_ && y == b_) || (x == b_ && y == a_);
  }

  void set_outage(Window w) {
    validate(w);
    spec_.outages.push_back(w);
  }

  bool in_outage(Seconds t) const {
    return std::any_of(spec_.outages.begin(), spec_.outages.end(),
                       [t](const Window& w) { return w.contains(t); });
  }

  // Loss is a pure function of (seed, link id, frame index).
  bool transmit(Seconds t, std::uint64_t seed) {
    const std::uint64_t index = frames_++;
    bool delivered = false;
    if (!in_outage(t)) {
      const std::uint64_t bits = splitmix64(seed ^ fnv1a(id_) ^ splitmix64(index));
      delivered = !(unit_interval(bits) < spec_.loss_prob);
    }
    if (!delivered) ++lost_;
    return delivered;
  }

  std::uint64_t frames() const { return frames_; }
  std::uint64_t lost() const { return lost_; }

 private:
  std::string id_;
  std::string a_;
  std::string b_;
  LinkSpec spec_;
  std::uint64_t frames_ = 0;
  std::uint64_t lost_ = 0;
};

// Strict star: every field node has one short link to the relay, the relay
// has one long link to the gateway, and the gateway has one uplink to the cloud.
class Network {
 public:
  static constexpr const char* kRelay = "relay";
  static constexpr const char* kGateway = "gateway";
  static constexpr const char* kCloud = "cloud";

  Network(std::uint64_t seed, LinkSpec long_spec, LinkSpec uplink_spec) : seed_(seed) {
    long_spec.cls = LinkClass::long_range;
    uplink_spec.cls = LinkClass::uplink;
    links_.emplace("long", Link("long", kRelay, kGateway, std::move(long_spec)));
    links_.emplace("uplink", Link("uplink", kGateway, kCloud, std::move(uplink_spec)));
  }

  void add_node(const std::string& node_id, LinkSpec short_spec) {
    require_token(node_id, "node id");
    if (node_id == kRelay || node_id == kGateway || node_id == kCloud)
      throw TopologyError("node id '" + node_id + "' is reserved");
    const std::string id = "short:" + node_id;
    if (links_.count(id)) throw TopologyError("node '" + node_id + "' already linked");
    short_spec.cls = LinkClass::short_range;
    links_.emplace(id, Link(id, node_id, kRelay, std::move(short_spec)));
  }

  Link& link(const std::string& id) {
    auto it = links_.find(id);
    if (it == links_.end()) throw TopologyError("no link '" + id + "'");
    return it->second;
  }

  Link& link_between(const std::string& src, const std::string& dst) {
    if (src == dst) throw TopologyError("frame source equals destination");
    for (const auto& candidate : {"short:" + src, "short:" + dst, std::string("long"), std::string("uplink")}) {
      auto it = links_.find(candidate);
      if (it != links_.end() && it->second.connects(src, dst)) return it->second;
    }
    throw TopologyError("no link between '" + src + "' and '" + dst + "'");
  }

  // Sends a frame; if delivered, `on_arrival` fires at t + latency on the sim clock.
  bool send(sim::SimClock& clock, Frame f, std::function<void(const Frame&)> on_arrival) {
    Link& l = link_between(f.src, f.dst);
    f.t_sent = clock.now();
    const bool ok = l.transmit(f.t_sent, seed_);
    if (!ok) return false;
    ++in_flight_;
    const std::string target = f.dst;
    const std::string label = std::string(body_label(f)) + "@" + l.id();
    clock.schedule(f.t_sent + l.spec().latency_s, target, label,
                   [this, frame = std::move(f), cb = std::move(on_arrival)](sim::SimClock&) {
                     --in_flight_;
                     if (cb) cb(frame);
                   });
    return true;
  }

  std::int64_t in_flight() const { return in_flight_; }
  const std::map<std::string, Link>& links() const { return links_; }
  std::map<std::string, Link>& links() { return links_; }

 private:
  std::uint64_t seed_;
  std::map<std::string, Link> links_;
  std::int64_t in_flight_ = 0;
};

}  // namespace fieldnet::radio
