#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>
#include <thread>

#include <unistd.h>

#include "fieldnet/cloudcore.hpp"

using namespace fieldnet;
using namespace fieldnet::cloud;

namespace {

NodeDescriptor soil(const std::string& id, std::set<std::string> groups = {}) {
  NodeDescriptor d;
  d.node_id = id;
  d.kind = NodeKind::soil;
  d.position = {-41.29, 174.78};
  d.sensing = {{"air_temp", "air_temperature", "cheap", 150},
               {"moisture", "soil_moisture_cheap", "cheap", -20},
               {"moisture_ref", "soil_moisture_reference", "reference", -20}};
  d.groups = std::move(groups);
  d.nominal_period_s = 305;
  return d;
}

Packet pkt(const std::string& id, std::uint64_t seq, std::int64_t t, std::int64_t period = 305) {
  return Packet{id, seq, t, NodeKind::soil, {{"air_temp", 10.0 + seq, "C"}, {"moisture", 0.3, "m3/m3"}}, 4000, period};
}

// Independent reading of the triple lines: subject and predicate are the first
// two tokens, the object is the rest; quoted literals are unescaped.
struct ParsedTriple {
  std::string s, p, o;
  bool literal = false;
};

std::vector<ParsedTriple> parse_triples(const std::string& text) {
  std::vector<ParsedTriple> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto nl = text.find('\n', i);
    const std::string line = text.substr(i, nl - i);
    i = nl + 1;
    const auto a = line.find(' ');
    const auto b = line.find(' ', a + 1);
    ParsedTriple t{line.substr(0, a), line.substr(a + 1, b - a - 1), line.substr(b + 1)};
    if (t.o.size() >= 2 && t.o.front() == '"' && t.o.back() == '"') {
      std::string u;
      for (std::size_t k = 1; k + 1 < t.o.size(); ++k) {
        if (t.o[k] == '\\') ++k;
        u += t.o[k];
      }
      t.o = u;
      t.literal = true;
    }
    out.push_back(t);
  }
  return out;
}

std::filesystem::path tmpdir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fieldnet_cc_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(CloudStore, IngestAcksEveryKeyAndDedups) {
  CloudStore s;
  s.register_node(soil("soil-1"), 0);
  const auto acked = s.ingest_batch({pkt("soil-1", 1, 300), pkt("soil-1", 1, 300), pkt("soil-1", 2, 600)}, 700);
  EXPECT_EQ(acked.size(), 3u);
  EXPECT_EQ(s.packet_count(), 2u);
  EXPECT_EQ(s.query_series("soil-1", "air_temp", 0, 1000).size(), 2u);
}

// Re-ingesting any prefix of already-stored packets, in any order, leaves the
// store unchanged.
TEST(CloudProperty, IngestIsIdempotent) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 30; ++trial) {
    CloudStore s;
    s.register_node(soil("soil-1"), 0);
    std::vector<Packet> batch;
    const int n = std::uniform_int_distribution<int>(1, 40)(gen);
    for (int i = 0; i < n; ++i) batch.push_back(pkt("soil-1", i, 300 * i));
    s.ingest_batch(batch, 1);
    const auto dump = s.observation_dump();
    std::shuffle(batch.begin(), batch.end(), gen);
    batch.resize(std::uniform_int_distribution<int>(0, n)(gen));
    s.ingest_batch(batch, 2);
    EXPECT_EQ(s.observation_dump(), dump);
  }
}

// last_heard is the newest packet timestamp whatever order batches arrive in.
TEST(CloudProperty, LastHeardIsMaxTimestamp) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 30; ++trial) {
    CloudStore s;
    s.register_node(soil("soil-1"), 0);
    std::vector<Packet> all;
    std::int64_t newest = 0;
    for (int i = 0; i < 25; ++i) {
      const std::int64_t t = std::uniform_int_distribution<std::int64_t>(0, 100000)(gen);
      newest = std::max(newest, t);
      all.push_back(pkt("soil-1", i, t));
    }
    std::shuffle(all.begin(), all.end(), gen);
    for (std::size_t i = 0; i < all.size(); i += 4)
      s.ingest_batch({all.begin() + i, all.begin() + std::min(all.size(), i + 4)}, 0);
    EXPECT_EQ(*s.node_health("soil-1", 0).last_heard, newest);
  }
}

TEST(CloudStore, UnregisteredGoesToQuarantineThenPromotes) {
  CloudStore s;
  s.ingest_batch({pkt("soil-9", 1, 300), pkt("soil-9", 2, 600)}, 700);
  EXPECT_EQ(s.quarantine_count(), 2u);
  EXPECT_EQ(s.packet_count(), 0u);
  s.register_node(soil("soil-9"), 800);
  EXPECT_EQ(s.quarantine_count(), 0u);
  EXPECT_EQ(s.packet_count(), 2u);
  EXPECT_EQ(*s.node_health("soil-9", 800).last_heard, 600);
}

TEST(CloudStore, RegistryUpdateKeepsHistory) {
  CloudStore s;
  s.register_node(soil("soil-1", {"north"}), 10);
  EXPECT_THROW(s.register_node(soil("soil-1"), 11), ValidationError);
  NodePatch p;
  p.position = env::GeoPoint{-41.3, 174.8};
  p.notes = "moved after flood";
  s.update_node("soil-1", p, 20);
  const auto d = *s.node("soil-1");
  EXPECT_DOUBLE_EQ(d.position.lat, -41.3);
  EXPECT_EQ(d.notes, "moved after flood");
  EXPECT_EQ(d.registered_t, 10);
  const auto h = s.history("soil-1");
  ASSERT_EQ(h.size(), 2u);
  EXPECT_DOUBLE_EQ(h[0].snapshot.position.lat, -41.29);
  EXPECT_EQ(h[1].t, 20);
  EXPECT_THROW(s.update_node("ghost", p, 1), NotFoundError);
  NodePatch bad;
  bad.position = env::GeoPoint{95, 0};
  EXPECT_THROW(s.update_node("soil-1", bad, 1), ValidationError);
}

TEST(CloudStore, DescriptorCodecRoundTrips) {
  auto d = soil("soil-1", {"a", "b"});
  d.notes = "two  spaces inside";
  d.registered_t = 42;
  EXPECT_EQ(decode_descriptor(encode_descriptor(d)), d);
}

TEST(CloudStore, GroupRateFansOutToSnapshot) {
  CloudStore s;
  for (auto id : {"soil-1", "soil-2", "soil-3"}) s.register_node(soil(id, {"north"}), 0);
  s.register_node(soil("soil-4", {"south"}), 0);
  const auto g = s.set_group_rate("north", 600, 100);
  EXPECT_EQ(g.fanout, (std::vector<std::string>{"soil-1", "soil-2", "soil-3"}));
  // joining later does not retroactively receive the command
  NodePatch p;
  p.groups = std::set<std::string>{"north"};
  s.update_node("soil-4", p, 150);
  EXPECT_TRUE(s.command_status("soil-4").empty());
  EXPECT_EQ(s.drain_outbox(200).size(), 3u);
  EXPECT_TRUE(s.drain_outbox(201).empty());
  EXPECT_THROW(s.set_group_rate("north", 30, 300), ValidationError);
  EXPECT_THROW(s.set_group_rate("nobody", 600, 300), NotFoundError);
}

TEST(CloudStore, CommandConfirmedByMatchingPeriod) {
  CloudStore s;
  s.register_node(soil("soil-1", {"north"}), 0);
  s.set_group_rate("north", 600, 100);
  s.ingest_batch({pkt("soil-1", 1, 200, 305)}, 210);
  EXPECT_EQ(s.command_status("soil-1")[0].status, CommandStatus::staged);
  s.ingest_batch({pkt("soil-1", 2, 800, 600)}, 810);
  const auto st = s.command_status("soil-1")[0];
  EXPECT_EQ(st.status, CommandStatus::delivered);
  EXPECT_EQ(*st.delivered_t, 800);
}

TEST(CloudStore, SilenceThreshold) {
  CloudStore s;  // threshold 3 periods
  s.register_node(soil("soil-1"), 0);
  s.ingest_batch({pkt("soil-1", 1, 1000)}, 1000);
  EXPECT_FALSE(s.node_health("soil-1", 1000 + 3 * 305).silent);
  EXPECT_TRUE(s.node_health("soil-1", 1000 + 3 * 305 + 1).silent);
  EXPECT_EQ(s.silent_nodes(1000 + 3 * 305 + 1).size(), 1u);
  // never heard: measured from registration
  s.register_node(soil("soil-2"), 5000);
  EXPECT_FALSE(s.node_health("soil-2", 5000 + 915).silent);
  EXPECT_TRUE(s.node_health("soil-2", 5000 + 916).silent);
}

TEST(CloudStore, StagedLongerPeriodDelaysSilence) {
  CloudStore s;
  s.register_node(soil("soil-1", {"g"}), 0);
  s.ingest_batch({pkt("soil-1", 1, 0)}, 0);
  s.set_group_rate("g", 1200, 10);
  EXPECT_FALSE(s.node_health("soil-1", 3000).silent);
  EXPECT_EQ(s.node_health("soil-1", 3000).period_s, 1200);
}

TEST(CloudStore, QuerySeriesErrors) {
  CloudStore s;
  s.register_node(soil("soil-1"), 0);
  EXPECT_THROW(s.query_series("soil-1", "air_temp", 10, 5), ValidationError);
  EXPECT_THROW(s.query_series("ghost", "air_temp", 0, 5), NotFoundError);
  EXPECT_THROW(s.query_series("soil-1", "wind", 0, 5), NotFoundError);
  EXPECT_TRUE(s.query_series("soil-1", "moisture_ref", 0, 5).empty());
  s.ingest_batch({pkt("soil-1", 1, 300), pkt("soil-1", 2, 600), pkt("soil-1", 3, 900)}, 1000);
  const auto pts = s.query_series("soil-1", "air_temp", 300, 600);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0], (std::pair<std::int64_t, double>{300, 11.0}));
}

TEST(CloudStore, RejectsWhitespaceIds) {
  CloudStore s;
  EXPECT_THROW(s.register_node(soil("bad id"), 0), ValidationError);
  Packet p = pkt("soil-1", 1, 0);
  p.readings[0].channel = "";
  EXPECT_THROW(s.ingest_batch({p}, 0), ValidationError);
}

TEST(CloudStore, SemanticExportRoundTrips) {
  CloudStore s;
  s.register_node(soil("soil-1"), 0);
  Packet p{"soil-1", 7, 2100, NodeKind::soil,
           {{"moisture", 0.31, "m3/m3"}, {"moisture_ref", 0.305, "m3/m3"}, {"moisture.r2", 0.29, "m3/m3"}}, 4000, 305};
  s.ingest_batch({p}, 2200);
  const auto triples = s.export_semantic({"soil-1", 7});
  EXPECT_GE(triples.size(), 4u);
  const auto parsed = parse_triples(serialize_triples(triples));
  ASSERT_EQ(parsed.size(), triples.size());

  std::set<std::string> observations;
  std::map<std::string, std::string> results;  // result subject -> value
  for (const auto& t : parsed) {
    if (t.p == "rdf:type" && t.o == "sosa:Observation") observations.insert(t.s);
    if (t.p == "qudt:numericValue") results[t.s] = t.o;
  }
  EXPECT_EQ(observations.size(), 3u);  // replicates get distinct subjects
  std::set<double> values;
  for (const auto& [subj, v] : results) values.insert(std::stod(v));
  EXPECT_EQ(values, (std::set<double>{0.31, 0.305, 0.29}));
  // replicate inherits the declared sensing kind
  bool replicate_kind = false;
  for (const auto& t : parsed)
    if (t.s == "<sensor:soil-1/moisture.r2>" && t.p == "fieldnet:channelKind")
      replicate_kind = t.o == "soil_moisture_cheap" && t.literal;
  EXPECT_TRUE(replicate_kind);
  EXPECT_THROW(s.export_semantic({"soil-1", 8}), NotFoundError);
}

TEST(CloudStore, LogReplayRebuildsEverything) {
  const auto dir = tmpdir("replay");
  std::string obs;
  {
    auto s = CloudStore::open(dir);
    s->ingest_batch({pkt("soil-5", 1, 100)}, 110);  // quarantined, then promoted
    s->register_node(soil("soil-1", {"north"}), 0);
    s->register_node(soil("soil-5", {"north"}), 120);
    s->ingest_batch({pkt("soil-1", 1, 300), pkt("soil-1", 2, 600)}, 700);
    s->set_group_rate("north", 600, 800);
    s->drain_outbox(810);
    s->command_node("soil-1", {Command::Kind::power_cycle, 0}, 900);
    s->ingest_batch({pkt("ghost", 1, 100)}, 950);
    obs = s->observation_dump();
  }
  auto back = CloudStore::open(dir);
  EXPECT_EQ(back->observation_dump(), obs);
  EXPECT_EQ(back->quarantine_count(), 1u);
  EXPECT_EQ(back->group_commands("north").size(), 1u);
  EXPECT_EQ(back->group_commands("north")[0].fanout.size(), 2u);
  const auto outbox = back->drain_outbox(1000);
  ASSERT_EQ(outbox.size(), 1u);
  EXPECT_EQ(outbox[0].command.kind, Command::Kind::power_cycle);
  std::filesystem::remove_all(dir);
}

TEST(CloudStore, ConcurrentIngestAndReads) {
  CloudStore s;
  s.register_node(soil("soil-1"), 0);
  std::thread writer([&] {
    for (int i = 0; i < 2000; ++i) s.ingest_batch({pkt("soil-1", i, i)}, i);
  });
  std::size_t last = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto n = s.query_series("soil-1", "air_temp", 0, 1 << 20).size();
    EXPECT_GE(n, last);
    last = n;
  }
  writer.join();
  EXPECT_EQ(s.packet_count(), 2000u);
}
