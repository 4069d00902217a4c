#include <gtest/gtest.h>

#include <chrono>
#include <map>

#include "fieldnet/deployment.hpp"
#include "fieldnet/scenario_io.hpp"
#include "fixtures.hpp"

using namespace fieldnet;

namespace {

Scenario short_default(Seconds days) {
  Scenario sc = default_scenario();
  sc.duration = days * kDay;
  return sc;
}

// Per node, cloud packets keyed by seq must be contiguous from 1 with
// increasing timestamps.
void expect_ordered(const cloud::CloudStore& c) {
  std::map<std::string, std::vector<Packet>> by_node;
  for (const auto& [k, sp] : c.packets()) by_node[k.node_id].push_back(sp.packet);
  for (const auto& [id, v] : by_node) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_EQ(v[i].seq, i + 1) << id;
      if (i) {
        EXPECT_GT(v[i].t, v[i - 1].t) << id;
      }
    }
  }
}

}  // namespace

TEST(Deployment, SameSeedSameEverything) {
  Deployment a(short_default(2)), b(short_default(2));
  a.run();
  b.run();
  EXPECT_EQ(a.clock().trace_digest(), b.clock().trace_digest());
  EXPECT_EQ(a.report_text(), b.report_text());
  EXPECT_EQ(a.cloud().observation_dump(), b.cloud().observation_dump());
}

TEST(Deployment, DifferentSeedDiffers) {
  auto sc = short_default(1);
  Deployment a(sc);
  sc.seed += 1;
  Deployment b(sc);
  a.run();
  b.run();
  EXPECT_NE(a.cloud().observation_dump(), b.cloud().observation_dump());
}

TEST(Deployment, LosslessYieldIsOne) {
  Deployment d(short_default(1));
  d.run();
  const auto j = report::build(d.run_data());
  EXPECT_TRUE(j["closure_ok"].get<bool>());
  EXPECT_DOUBLE_EQ(j["totals"]["yield"].get<double>(), 1.0);
  EXPECT_TRUE(d.drained());
  expect_ordered(d.cloud());
}

TEST(Deployment, ExactlyOnceUnderHeavyLoss) {
  Deployment d(fixtures::exactly_once(0.5, 77));
  d.run();
  const auto j = report::build(d.run_data());
  EXPECT_EQ(j["totals"]["emitted"].get<int>(), 1000);
  EXPECT_EQ(d.cloud().packet_count(), 1000u);
  EXPECT_EQ(d.relay().data_loss(), 0u);
  EXPECT_TRUE(j["closure_ok"].get<bool>());
  EXPECT_GT(d.gateway().duplicates(), 0u);  // retries did happen
}

TEST(Deployment, ShortLinkLossIsAccountedNotHidden) {
  auto sc = short_default(1);
  sc.short_link.loss_prob = 0.2;
  Deployment d(sc);
  d.run();
  const auto j = report::build(d.run_data());
  EXPECT_GT(j["totals"]["link_lost"].get<int>(), 0);
  EXPECT_TRUE(j["closure_ok"].get<bool>());
}

TEST(Deployment, UplinkOutageHeldAndDrained) {
  auto sc = short_default(3);
  FaultEvent f;
  f.at = 36 * kHour;
  f.link = "uplink";
  f.until = 42 * kHour;
  sc.faults.push_back(f);
  Deployment d(sc);
  d.run_until(41 * kHour);
  EXPECT_GT(d.gateway().not_cloud_acked(), 100u);
  // nothing reached the cloud during the outage
  for (const auto& [k, sp] : d.cloud().packets()) EXPECT_FALSE(sp.stored_t > 36 * kHour && sp.stored_t < 42 * kHour);
  d.run_until(sc.duration);
  d.drain();
  d.finish();
  const auto j = report::build(d.run_data());
  EXPECT_DOUBLE_EQ(j["totals"]["yield"].get<double>(), 1.0);
  EXPECT_GE(j["latency_s"]["max"].get<double>(), 5.9 * kHour);
  EXPECT_EQ(d.relay().unacked(), 0u);
  EXPECT_EQ(d.gateway().not_cloud_acked(), 0u);
  expect_ordered(d.cloud());
}

TEST(Deployment, RestartsLeaveCloudUnchanged) {
  auto sc = short_default(2);
  sc.long_link.loss_prob = 0.2;
  Deployment plain(sc);
  sc.restarts = {10 * kHour, 27 * kHour};
  Deployment restarted(sc);
  plain.run();
  restarted.run();
  EXPECT_EQ(restarted.restarts(), 2);
  EXPECT_EQ(restarted.cloud().observation_dump(), plain.cloud().observation_dump());
  EXPECT_EQ(restarted.relay().state_dump(), plain.relay().state_dump());
  EXPECT_EQ(restarted.gateway().state_dump(), plain.gateway().state_dump());
}

TEST(Deployment, GroupRateReachesOnlyMembers) {
  auto sc = short_default(2);
  CommandEvent c;
  c.at = kDay;
  c.group = "soil";
  c.command = {Command::Kind::set_period, 600};
  sc.commands.push_back(c);
  Deployment d(sc);
  std::map<std::string, Seconds> applied;
  d.on_wake = [&](Seconds t, const std::string& id, const node::WakeResult& r) {
    if (r.applied && !applied.count(id)) applied[id] = t;
  };
  d.run_until(kDay + 2 * 305);
  for (const auto& id : d.node_ids()) {
    const bool member = id.rfind("soil-", 0) == 0;
    EXPECT_EQ(d.node(id).duty.period(), member ? 600 : 305) << id;
    EXPECT_EQ(applied.count(id), member ? 1u : 0u) << id;
  }
  d.run_until(2 * kDay);
  d.drain();
  for (const auto& s : d.cloud().command_status("soil-1")) EXPECT_EQ(s.status, cloud::CommandStatus::delivered);
}

TEST(Deployment, RadioHangGoesSilentAndPowerCycleRecovers) {
  auto sc = fixtures::radio_hang(kDay, 2 * kDay);
  Deployment d(sc);
  d.run_until(kDay);
  const auto heard = *d.cloud().node_health("soil-2", static_cast<std::int64_t>(kDay)).last_heard;
  d.run_until(kDay + 2 * kHour);
  EXPECT_EQ(*d.cloud().node_health("soil-2", 0).last_heard, heard);
  EXPECT_FALSE(d.cloud().node_health("soil-2", heard + 915).silent);
  EXPECT_TRUE(d.cloud().node_health("soil-2", heard + 916).silent);
  const auto now = static_cast<std::int64_t>(d.clock().now());
  EXPECT_EQ(d.cloud().silent_nodes(now).size(), 1u);
  d.cloud().command_node("soil-2", {Command::Kind::power_cycle, 0}, now);
  d.run_until(kDay + 3 * kHour);
  const auto h = d.cloud().node_health("soil-2", static_cast<std::int64_t>(d.clock().now()));
  EXPECT_FALSE(h.silent);
  EXPECT_GT(*h.last_heard, now);
  EXPECT_FALSE(d.node("soil-2").faults.radio_hang);
}

TEST(Deployment, SinglePackDepletion) {
  Deployment d(fixtures::single_pack());
  d.run();
  const auto& n = d.node("soil-1");
  ASSERT_TRUE(n.depleted_at);
  EXPECT_NEAR(*n.depleted_at / kHour, 168.0, 5.0);
  const auto j = report::build(d.run_data());
  EXPECT_NEAR(j["nodes"]["soil-1"]["depleted_at_s"].get<double>(), *n.depleted_at, 1e-9);
  EXPECT_TRUE(j["closure_ok"].get<bool>());
}

TEST(Deployment, FaultStackFailsEarly) {
  const auto sc = load_scenario(std::string(FIELDNET_SCENARIOS) + "/fault_stack.yaml");
  Deployment d(sc);
  d.run();
  const auto j = report::build(d.run_data());
  EXPECT_TRUE(j["closure_ok"].get<bool>());
  // fault-free, three full packs would last roughly three times one pack
  for (const auto* id : {"soil-a", "soil-b"}) {
    const auto& n = j["nodes"][id];
    const bool depleted = !n["depleted_at_s"].is_null() && n["depleted_at_s"].get<double>() < 5 * kDay;
    EXPECT_TRUE(depleted || n["silent_episodes"].get<int>() > 0) << id << ' ' << n.dump();
  }
  EXPECT_TRUE(d.node("soil-b").faults.water_ingress_dead);
}

TEST(Deployment, RejectsInvalidScenario) {
  auto sc = short_default(1);
  sc.nodes.push_back(sc.nodes.front());
  EXPECT_THROW(Deployment{sc}, ValidationError);
}

TEST(Deployment, LiveInjectionAtCurrentInstant) {
  auto sc = short_default(1);
  Deployment d(sc);
  d.run_until(6 * kHour);
  FaultEvent f;
  f.node = "soil-3";
  f.fault.kind = node::FaultKind::radio_hang;
  d.inject_now(f);
  EXPECT_TRUE(d.node("soil-3").faults.radio_hang);
  f.node = "ghost";
  EXPECT_THROW(d.inject_now(f), NotFoundError);
}
