#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "fieldnet/core.hpp"

namespace fieldnet::sim {

using EventId = std::uint64_t;

class SimClock;

// A scheduled callback. `target` names the receiving component and `label`
// summarises the payload; both feed the replay trace.
struct SimEvent {
  Seconds fire_time = 0;
  std::string target;
  std::string label;
  EventId insertion_index = 0;
  std::function<void(SimClock&)> action;
};

struct TraceEntry {
  Seconds fire_time;
  std::string target;
  std::string label;

  bool operator==(const TraceEntry&) const = default;
};

// Deterministic single-threaded event scheduler. Events fire in
// (fire_time, insertion_index) order.
class SimClock {
 public:
  SimClock() = default;
  explicit SimClock(Seconds start) : now_(start) {}

  Seconds now() const { return now_; }
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t processed_total() const { return processed_; }

  EventId schedule(Seconds at, std::string target, std::string label,
                   std::function<void(SimClock&)> action) {
    if (at < now_) {
      throw ValidationError("scheduling into the past: at=" + std::to_string(at) +
                            " now=" + std::to_string(now_));
    }
    const EventId id = next_id_++;
    queue_.push(SimEvent{at, std::move(target), std::move(label), id, std::move(action)});
    return id;
  }

  EventId schedule_in(Seconds delay, std::string target, std::string label,
                      std::function<void(SimClock&)> action) {
    return schedule(now_ + delay, std::move(target), std::move(label), std::move(action));
  }

  // Processes every event with fire_time <= t_end, including ones scheduled by
  // handlers along the way, then parks the clock at t_end.
  std::size_t run_until(Seconds t_end) {
    if (t_end < now_) {
      throw ValidationError("run_until into the past");
    }
    std::size_t count = 0;
    while (!queue_.empty() && queue_.top().fire_time <= t_end) {
      SimEvent ev = queue_.top();
      queue_.pop();
      now_ = ev.fire_time;
      trace_digest_ = splitmix64(fnv1a(ev.label, fnv1a(ev.target, trace_digest_)) ^
                                 std::bit_cast<std::uint64_t>(ev.fire_time));
      if (record_trace_) trace_.push_back({ev.fire_time, ev.target, ev.label});
      ++count;
      ++processed_;
      if (ev.action) ev.action(*this);
    }
    now_ = t_end;
    return count;
  }

  bool has_pending() const { return !queue_.empty(); }
  Seconds next_fire_time() const { return queue_.empty() ? now_ : queue_.top().fire_time; }

  void record_trace(bool on) { record_trace_ = on; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  std::uint64_t trace_digest() const { return trace_digest_; }

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
      return a.insertion_index > b.insertion_index;
    }
  };

  Seconds now_ = 0;
  EventId next_id_ = 0;
  std::uint64_t processed_ = 0;
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
  bool record_trace_ = false;
  std::vector<TraceEntry> trace_;
  std::uint64_t trace_digest_ = 0xcbf29ce484222325ULL;
};

}  // namespace fieldnet::sim
