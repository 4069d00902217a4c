#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include "fieldnet/deployment.hpp"

namespace fieldnet {

// Drives a deployment against the wall clock, `time_compression` simulated
// seconds per real second, feeding a shared cloud store. Faults handed in from
// other threads are applied by the simulation thread at their due time.
class LiveRun {
 public:
  LiveRun(Scenario sc, std::shared_ptr<cloud::CloudStore> store, std::chrono::milliseconds tick = std::chrono::milliseconds(50))
      : tick_(tick), dep_(std::move(sc), DeploymentOptions{std::nullopt, std::move(store)}) {}

  ~LiveRun() { stop(); }

  void start() {
    if (thread_.joinable()) return;
    thread_ = std::thread([this] { loop(); });
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
  }

  std::int64_t now() const { return static_cast<std::int64_t>(std::floor(sim_now_.load())); }
  bool finished() const { return finished_.load(); }

  // Queues a node fault; applied at max(f.at, now).
  void inject(const FaultEvent& f) {
    if (f.node.empty()) throw ValidationError("live injection targets a node");
    const auto& nodes = dep_.scenario().nodes;
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const NodeSpec& n) { return n.cfg.id == f.node; });
    if (it == nodes.end()) throw NotFoundError("no node '" + f.node + "'");
    node::NodeState probe(it->cfg);
    node::inject_fault(probe, f.fault, f.at);  // rejects faults the node cannot take
    std::lock_guard lock(mu_);
    pending_.push_back(f);
  }

 private:
  void loop() {
    const double rate = dep_.scenario().time_compression;
    const Seconds end = dep_.scenario().duration;
    auto last = std::chrono::steady_clock::now();
    double t = 0;
    while (t < end) {
      std::unique_lock lock(mu_);
      if (cv_.wait_for(lock, tick_, [this] { return stopping_; })) return;
      const auto wall = std::chrono::steady_clock::now();
      t = std::min(end, t + rate * std::chrono::duration<double>(wall - last).count());
      last = wall;
      std::vector<FaultEvent> due, later;
      for (auto& f : pending_) (f.at <= t ? due : later).push_back(f);
      pending_.swap(later);
      lock.unlock();
      for (auto& f : due) {
        dep_.run_until(std::max(f.at, dep_.clock().now()));
        try {
          dep_.inject_now(f);
        } catch (const Error& e) {
          std::cerr << "fieldnet: fault on " << f.node << " dropped: " << e.what() << "\n";
        }
      }
      dep_.run_until(t);
      sim_now_.store(t);
    }
    dep_.drain();
    dep_.finish();
    finished_.store(true);
  }

  std::chrono::milliseconds tick_;
  Deployment dep_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::vector<FaultEvent> pending_;
  std::atomic<double> sim_now_{0};
  std::atomic<bool> finished_{false};
  std::thread thread_;
};

}  // namespace fieldnet
