#include <gtest/gtest.h>

#include <string>

#include "dtnsim/engine.hpp"
#include "dtnsim/scenario.hpp"
#include "dtnsim/trace.hpp"
#include "support/epidemic_oracle.hpp"

using namespace dtnsim;

TEST(Trace, EpidemicMatchesReachabilityOracle) {
  Rng rng(2024, "oracle");
  for (int k = 0; k < 200; ++k) {
    const oracle::Case c = oracle::random_case(rng);
    const oracle::Outcome want = oracle::expected(c);
    const oracle::Outcome got = oracle::simulate(c);
    ASSERT_EQ(got.holders.size(), want.holders.size());
    for (std::size_t m = 0; m < want.holders.size(); ++m) {
      EXPECT_EQ(got.holders[m], want.holders[m]) << "case " << k << " message " << m;
      EXPECT_EQ(got.delivered[m], want.delivered[m]) << "case " << k << " message " << m;
      if (want.delivered[m]) {
        EXPECT_EQ(got.delivered_at[m], want.delivered_at[m]) << "case " << k;
      }
    }
  }
}

TEST(Trace, OracleSeesRelayChains) {
  // 2 -> 3 -> 4 -> 0, each hop after the previous one.
  oracle::Case c;
  c.nodes = 5;
  c.destinations = {0, 1};
  c.contacts = {{2, 3, 2, 3}, {3, 4, 4, 5}, {4, 0, 6, 7}, {4, 1, 8, 9}};
  c.messages = {{1, 2, 0, 10}};
  c.end = 10;
  const auto want = oracle::expected(c);
  EXPECT_EQ(want.holders[0], (std::set<NodeId>{2, 3, 4}));
  EXPECT_TRUE(want.delivered[0]);
  EXPECT_EQ(want.delivered_at[0], 6.0);
  const auto got = oracle::simulate(c);
  EXPECT_EQ(got.holders[0], want.holders[0]);
  EXPECT_EQ(got.delivered_at[0], 6.0);
}

TEST(Trace, ReplayCountsFirstDeliveryOnly) {
  const std::string text =
      "time,event,message_id,from,to,hop_count\n"
      "0,CREATE,M1,2,2,0\n"
      "5,SEND,M1,2,3,0\n"
      "6,RECV,M1,2,3,1\n"
      "7,DELIVER,M1,2,0,1\n"
      "8,DELIVER,M1,3,0,2\n"
      "9,ACK,M1,0,3,0\n"
      "10,ABORT,M1,3,4,1\n"
      "11,DROP,M1,3,3,1\n";
  const MetricsAccumulator m = replay_routing_trace(text);
  EXPECT_EQ(m.created, 1u);
  EXPECT_EQ(m.delivered, 1u);
  EXPECT_EQ(m.relayed, 4u);
  EXPECT_EQ(m.aborted, 1u);
  ASSERT_EQ(m.delivery_records.size(), 1u);
  EXPECT_EQ(m.delivery_records[0].delivered_at_s, 7.0);
  EXPECT_EQ(m.delivery_records[0].created_at_s, 0.0);
}

TEST(Trace, ReplayRejectsGarbage) {
  EXPECT_THROW(replay_routing_trace("time,event,message_id,from,to,hop_count\n1,TELEPORT,M1,0,1,0\n"), TraceError);
  EXPECT_THROW(replay_routing_trace("time,event,message_id,from,to,hop_count\nx,SEND,M1,0,1,0\n"), TraceError);
}

TEST(Trace, ReplayReproducesRunMetrics) {
  const std::string dir = DTNSIM_SCENARIO_DIR;
  ScenarioConfig c = parse_scenario(read_file(dir + "/yaan_default.cfg"));
  c.duration_s = 7200;
  for (auto proto : {Protocol::Epidemic, Protocol::SprayAndWait, Protocol::MaxProp}) {
    c.router.protocol = proto;
    RunOptions o;
    o.trace_routing = true;
    const ReportBundle b = run(prepare_scenario(c, dir), o);
    EXPECT_GT(b.metrics.delivered, 0u);
    EXPECT_EQ(replay_routing_trace(b.routing_trace), b.metrics) << to_string(proto);
  }
}

TEST(Trace, ContactTraceRoundTrip) {
  const auto events = parse_contact_trace("time,event,node_a,node_b\n1.5,UP,0,3\n4,DOWN,0,3\n");
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].time_s, 1.5);
  EXPECT_TRUE(events[0].up);
  EXPECT_FALSE(events[1].up);
  EXPECT_EQ(events[1].b, 3u);
}
