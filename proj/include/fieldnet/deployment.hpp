#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fieldnet/cloudcore.hpp"
#include "fieldnet/core.hpp"
#include "fieldnet/environment.hpp"
#include "fieldnet/fieldnode.hpp"
#include "fieldnet/journal.hpp"
#include "fieldnet/radiolink.hpp"
#include "fieldnet/report.hpp"
#include "fieldnet/scenario.hpp"
#include "fieldnet/simkernel.hpp"
#include "fieldnet/storeforward.hpp"

namespace fieldnet {

struct DeploymentOptions {
  std::optional<std::filesystem::path> store_dir;
  std::shared_ptr<cloud::CloudStore> cloud;  // use an existing store (live mode)
};

inline cloud::NodeDescriptor describe(const NodeSpec& n) {
  cloud::NodeDescriptor d;
  d.node_id = n.cfg.id;
  d.kind = n.cfg.kind;
  d.position = n.cfg.position;
  d.groups = n.groups;
  d.nominal_period_s = static_cast<std::int64_t>(std::llround(n.cfg.duty.period()));
  for (const auto& ch : n.cfg.complement)
    d.sensing.push_back({ch.id, node::to_string(ch.kind), node::to_string(ch.grade), ch.mount_cm});
  return d;
}

// The whole simulated deployment: field nodes, star radio, relay, gateway and
// cloud, driven by one sim clock.
class Deployment {
 public:
  explicit Deployment(Scenario sc, DeploymentOptions opt = {})
      : sc_(std::move(sc)),
        opt_(std::move(opt)),
        streams_(sc_.seed),
        network_(streams_.component_seed("radio"), sc_.long_link, sc_.uplink) {
    validate(sc_);
    if (opt_.store_dir) {
      for (const char* f : {"cloud.log", "relay.log", "gateway.log", "field.log"}) {
        if (std::filesystem::exists(*opt_.store_dir / f))
          throw ValidationError("store directory " + opt_.store_dir->string() + " already holds a run");
      }
      std::filesystem::create_directories(*opt_.store_dir);
    }
    auto journal_for = [&](const char* name) {
      return opt_.store_dir ? std::make_shared<Journal>(*opt_.store_dir / name) : Journal::in_memory();
    };
    relay_journal_ = journal_for("relay.log");
    gateway_journal_ = journal_for("gateway.log");
    field_log_ = journal_for("field.log");
    if (opt_.cloud) cloud_ = opt_.cloud;
    else cloud_ = std::make_shared<cloud::CloudStore>(sc_.cloud, journal_for("cloud.log"));

    if (std::any_of(sc_.nodes.begin(), sc_.nodes.end(),
                    [](const NodeSpec& n) { return n.cfg.kind == NodeKind::livestock; }))
      fence_.emplace(sc_.fence);

    field_log_->append("meta seed " + std::to_string(sc_.seed));
    field_log_->append("meta silence_threshold " + format_double(sc_.cloud.silence_threshold));

    std::set<std::string> ids;
    for (std::size_t i = 0; i < sc_.nodes.size(); ++i) {
      const auto& spec = sc_.nodes[i];
      ids.insert(spec.cfg.id);
      network_.add_node(spec.cfg.id, spec.short_link.value_or(sc_.short_link));
      auto fn = std::make_unique<FieldNode>(spec.cfg, streams_.fork("node:" + spec.cfg.id),
                                            streams_.fork("sheep:" + spec.cfg.id));
      if (spec.cfg.kind == NodeKind::soil) fn->soil = sc_.soil_initial;
      else fn->sheep = env::SheepState{start_inside(spec.cfg.position), 0.0, 0.0, false};
      field_log_->append("node " + spec.cfg.id + ' ' + to_string(spec.cfg.kind) + ' ' +
                         std::to_string(std::llround(spec.cfg.duty.period())));
      if (spec.registered && !cloud_->node(spec.cfg.id)) cloud_->register_node(describe(spec), 0);
      const Seconds period = spec.cfg.duty.period();
      const Seconds first = spec.first_wake.value_or(
          std::floor(period * static_cast<double>(i) / static_cast<double>(sc_.nodes.size())));
      nodes_.emplace(spec.cfg.id, std::move(fn));
      schedule_wake(spec.cfg.id, first);
    }
    known_nodes_ = ids;
    relay_ = std::make_unique<sf::Relay>(sc_.relay, relay_journal_, known_nodes_);
    gateway_ = std::make_unique<sf::Gateway>(sc_.gateway, gateway_journal_);

    for (const auto& f : sc_.faults) schedule_fault(f);
    for (const auto& c : sc_.commands) {
      clock_.schedule(c.at, "cloud", "command", [this, c](sim::SimClock& clk) { issue(c, clk.now()); });
    }
    for (auto r : sc_.restarts)
      clock_.schedule(r, "storeforward", "restart", [this](sim::SimClock&) { restart_storeforward(); });

    clock_.schedule(sc_.timing.relay_flush_interval, "relay", "flush",
                    [this](sim::SimClock& clk) { relay_tick(clk); });
    clock_.schedule(sc_.timing.upload_interval, "gateway", "upload",
                    [this](sim::SimClock& clk) { upload_tick(clk); });
  }

  Deployment(const Deployment&) = delete;
  Deployment& operator=(const Deployment&) = delete;

  // Runs the node phase to the scenario duration, then lets the relay and
  // gateway drain, bounded by the drain limit.
  void run() {
    run_until(sc_.duration);
    drain();
    finish();
  }

  void run_until(Seconds t) { clock_.run_until(std::max(t, clock_.now())); }

  void drain() {
    const Seconds limit = sc_.duration + sc_.timing.drain_limit;
    while (!drained() && clock_.now() < limit)
      clock_.run_until(std::min(limit, clock_.now() + sc_.timing.upload_interval));
  }

  bool drained() const {
    return relay_->unacked() == 0 && gateway_->not_cloud_acked() == 0 && short_in_flight_.empty() &&
           network_.in_flight() == 0;
  }

  // Writes the end-of-run records to the field log. Idempotent.
  void finish() {
    if (finished_) return;
    finished_ = true;
    for (const auto& k : short_in_flight_) field_log_->append("inflight " + k.node_id + ' ' + std::to_string(k.seq));
    for (const auto& [id, l] : network_.links())
      field_log_->append("link " + id + ' ' + std::to_string(l.frames()) + ' ' + std::to_string(l.lost()));
    field_log_->append("end " + format_double(std::min(clock_.now(), sc_.duration)) + ' ' + format_double(clock_.now()));
  }

  report::RunData run_data() const { return report::collect(field_log_->read_all(), *cloud_, *relay_, *gateway_); }

  std::string report_text() const { return report::render(run_data()); }

  // Discards relay and gateway in-memory state and rebuilds both from their logs.
  void restart_storeforward() {
    relay_ = std::make_unique<sf::Relay>(sc_.relay, relay_journal_, known_nodes_);
    gateway_ = std::make_unique<sf::Gateway>(sc_.gateway, gateway_journal_);
    ++restarts_;
  }

  // Live-mode fault injection at the current instant.
  void inject_now(FaultEvent f) {
    f.at = clock_.now();
    if (!f.link.empty() && f.until <= f.at) throw ValidationError("link outage requires until > now");
    apply_fault(f);
  }

  sim::SimClock& clock() { return clock_; }
  const sim::SimClock& clock() const { return clock_; }
  const Scenario& scenario() const { return sc_; }
  radio::Network& network() { return network_; }
  cloud::CloudStore& cloud() { return *cloud_; }
  const cloud::CloudStore& cloud() const { return *cloud_; }
  std::shared_ptr<cloud::CloudStore> cloud_ptr() const { return cloud_; }
  sf::Relay& relay() { return *relay_; }
  sf::Gateway& gateway() { return *gateway_; }
  const node::NodeState& node(const std::string& id) const { return nodes_.at(id)->state; }
  node::NodeState& node(const std::string& id) { return nodes_.at(id)->state; }
  std::vector<std::string> node_ids() const {
    std::vector<std::string> v;
    for (const auto& [id, n] : nodes_) v.push_back(id);
    return v;
  }
  const Journal& field_log() const { return *field_log_; }
  int restarts() const { return restarts_; }

  // Ground truth at the node's location, as last advanced by the simulation.
  node::EnvSnapshot truth(const std::string& id, Seconds t) { return snapshot(*nodes_.at(id), t); }

  // Observer hook fired after every node wake (t, node id, packets sent, result).
  std::function<void(Seconds, const std::string&, const node::WakeResult&)> on_wake;

 private:
  struct FieldNode {
    node::NodeState state;
    Rng rng;
    Rng sheep_rng;
    std::optional<env::SoilState> soil;
    Seconds soil_t = 0;
    std::optional<env::SheepState> sheep;
    Seconds sheep_t = 0;
    Seconds energy_t = 0;
    bool energy_started = false;

    FieldNode(node::NodeConfig cfg, Rng r, Rng sr) : state(std::move(cfg)), rng(r), sheep_rng(sr) {}
  };

  env::GeoPoint start_inside(env::GeoPoint p) const {
    if (fence_ && !fence_->contains(p)) return fence_->centroid();
    return p;
  }

  void schedule_wake(const std::string& id, Seconds at) {
    clock_.schedule(at, id, "wake", [this, id](sim::SimClock& clk) { wake(id, clk.now()); });
  }

  void schedule_fault(const FaultEvent& f) {
    if (!f.link.empty()) {
      apply_fault(f);  // outage windows are known up front
      return;
    }
    clock_.schedule(f.at, f.node, std::string("fault:") + node::to_string(f.fault.kind),
                    [this, f](sim::SimClock&) { apply_fault(f); });
  }

  void apply_fault(const FaultEvent& f) {
    if (!f.link.empty()) {
      network_.link(f.link).set_outage({f.at, f.until});
      return;
    }
    auto it = nodes_.find(f.node);
    if (it == nodes_.end()) throw NotFoundError("no node '" + f.node + "'");
    node::inject_fault(it->second->state, f.fault, f.at);
  }

  void issue(const CommandEvent& c, Seconds t) {
    const auto now = static_cast<std::int64_t>(std::floor(t));
    if (!c.group.empty()) cloud_->set_group_rate(c.group, c.command.period_s, now);
    else cloud_->command_node(c.node, c.command, now);
  }

  void advance_environment(FieldNode& fn, Seconds t) {
    if (fn.soil) {
      while (fn.soil_t < t) {
        const Seconds dt = std::min(sc_.timing.soil_substep, t - fn.soil_t);
        const double rain = env::rainfall_at(sc_.weather, fn.soil_t);
        const double air = env::air_conditions(sc_.weather, fn.soil_t).temp_c;
        fn.soil = env::step_soil(*fn.soil, rain, dt, sc_.soil, air);
        fn.soil_t += dt;
      }
    }
    if (fn.sheep && fence_) {
      while (fn.sheep_t < t) {
        const Seconds dt = std::min(sc_.timing.sheep_substep, t - fn.sheep_t);
        fn.sheep = env::step_sheep(*fn.sheep, *fence_, dt, sc_.movement, fn.sheep_rng);
        fn.sheep_t += dt;
      }
    }
  }

  node::EnvSnapshot snapshot(FieldNode& fn, Seconds t) {
    advance_environment(fn, t);
    node::EnvSnapshot e;
    const auto air = env::air_conditions(sc_.weather, t);
    e.air_temp_c = air.temp_c;
    e.air_humidity_pct = air.humidity_pct;
    if (fn.soil) {
      e.soil_theta = fn.soil->theta;
      e.soil_temp_c = fn.soil->temp_c;
      e.surface_flow = env::surface_flow(*fn.soil, env::rainfall_at(sc_.weather, t));
    }
    if (fn.sheep) e.sheep = *fn.sheep;
    return e;
  }

  void harvest(FieldNode& fn, Seconds t) {
    if (!fn.energy_started) {
      fn.energy_started = true;
      fn.energy_t = t;
      return;
    }
    constexpr Seconds kStep = 600;
    while (fn.energy_t < t) {
      const Seconds dt = std::min(kStep, t - fn.energy_t);
      const double irr = env::irradiance_at(sc_.weather, fn.energy_t + dt / 2);
      fn.state.bank = node::solar_harvest(fn.state.bank, irr, dt);
      fn.energy_t += dt;
    }
  }

  void wake(const std::string& id, Seconds t) {
    FieldNode& fn = *nodes_.at(id);
    harvest(fn, t);
    const node::EnvSnapshot e = snapshot(fn, t);
    const std::uint64_t radio_seed = streams_.component_seed("radio");
    node::ListenFn listen = [&, id](Seconds) -> std::optional<Command> {
      auto pending = relay_->pending_command(id);
      if (!pending) return std::nullopt;
      if (!network_.link_between(radio::Network::kRelay, id).transmit(clock_.now(), radio_seed)) return std::nullopt;
      relay_->mark_delivered(id, pending->issued_t);
      return pending->command;
    };
    const bool was_dormant = fn.state.dormant;
    node::WakeResult r = node::wake_cycle(fn.state, t, e, fn.rng, listen);

    for (const auto& p : r.packets) {
      field_log_->append("emit " + id + ' ' + std::to_string(p.seq) + ' ' + std::to_string(p.t));
      radio::Frame f{id, radio::Network::kRelay, p, t};
      const PacketKey key = p.key();
      const bool sent = network_.send(clock_, std::move(f), [this, key](const radio::Frame& fr) {
        short_in_flight_.erase(key);
        relay_->ingest(std::get<Packet>(fr.body), clock_.now());
      });
      if (sent) short_in_flight_.insert(key);
      else field_log_->append("lost " + id + ' ' + std::to_string(p.seq));
    }
    if (fn.state.dormant && !was_dormant) {
      const double at = fn.state.depleted_at.value_or(t);
      field_log_->append("dormant " + id + ' ' + format_double(at));
    }
    if (on_wake) on_wake(t, id, r);
    if (r.next_wake && *r.next_wake < sc_.duration) schedule_wake(id, *r.next_wake);
  }

  void relay_tick(sim::SimClock& clk) {
    const Seconds t = clk.now();
    for (auto& p : relay_->flush(t)) {
      radio::Frame f{radio::Network::kRelay, radio::Network::kGateway, std::move(p), t};
      network_.send(clk, std::move(f), [this](const radio::Frame& fr) {
        const Ack ack = gateway_->ingest(std::get<Packet>(fr.body), clock_.now());
        radio::Frame back{radio::Network::kGateway, radio::Network::kRelay, ack, clock_.now()};
        network_.send(clock_, std::move(back),
                      [this](const radio::Frame& a) { relay_->handle_ack(std::get<Ack>(a.body)); });
      });
    }
    for (const auto& c : gateway_->outbound_commands()) {
      radio::Frame f{radio::Network::kGateway, radio::Network::kRelay, radio::CommandFrame{c.node_id, c.command, c.issued_t}, t};
      network_.send(clk, std::move(f), [this, c](const radio::Frame&) {
        try {
          relay_->stage_command(c);
        } catch (const NotFoundError&) {
          // unknown at the relay: nothing to deliver it to
        }
        gateway_->mark_forwarded(c.node_id, c.issued_t);
      });
    }
    clk.schedule_in(sc_.timing.relay_flush_interval, "relay", "flush",
                    [this](sim::SimClock& c) { relay_tick(c); });
  }

  void upload_tick(sim::SimClock& clk) {
    const Seconds t = clk.now();
    auto& up = network_.link("uplink");
    const bool available = !up.in_outage(t);
    if (available) {
      const auto now = static_cast<std::int64_t>(std::floor(t));
      auto batch = gateway_->upload(t, true);
      if (up.transmit(t, streams_.component_seed("radio"))) {
        const auto acked = cloud_->ingest_batch(batch, now);
        if (up.transmit(t, streams_.component_seed("radio"))) {
          gateway_->handle_cloud_ack(acked);
          for (const auto& c : cloud_->drain_outbox(now)) gateway_->queue_command(c);
        }
      }
    }
    clk.schedule_in(sc_.timing.upload_interval, "gateway", "upload",
                    [this](sim::SimClock& c) { upload_tick(c); });
  }

  Scenario sc_;
  DeploymentOptions opt_;
  RngStreams streams_;
  sim::SimClock clock_;
  radio::Network network_;
  std::optional<env::GeoFence> fence_;
  std::map<std::string, std::unique_ptr<FieldNode>> nodes_;
  std::set<std::string> known_nodes_;
  std::shared_ptr<Journal> relay_journal_;
  std::shared_ptr<Journal> gateway_journal_;
  std::shared_ptr<Journal> field_log_;
  std::shared_ptr<cloud::CloudStore> cloud_;
  std::unique_ptr<sf::Relay> relay_;
  std::unique_ptr<sf::Gateway> gateway_;
  std::set<PacketKey> short_in_flight_;
  bool finished_ = false;
  int restarts_ = 0;
};

}  // namespace fieldnet
