#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "dtnsim/engine.hpp"
#include "dtnsim/rng.hpp"
#include "dtnsim/scenario.hpp"

using namespace dtnsim;

namespace {

ScenarioConfig stationary_config(double end_s) {
  std::ostringstream s;
  s << "Scenario.endTime = " << end_s << "\n"
    << "Group1.name = sinks\nGroup1.role = destination\nGroup1.movement = stationary\n"
    << "Group1.count = 2\nGroup1.points = 0 0; 5000 0\nGroup1.speed = 0, 0\n"
    << "Group2.name = src\nGroup2.role = source\nGroup2.movement = stationary\n"
    << "Group2.count = 3\nGroup2.points = 0 5000; 5000 5000; 9000 9000\nGroup2.speed = 0, 0\n"
    << "Group3.name = idle\nGroup3.role = carrier\nGroup3.movement = stationary\n"
    << "Group3.points = 100 100\nGroup3.speed = 0, 0\n";
  return parse_scenario(s.str());
}

PreparedScenario bundled(double until) {
  const std::string dir = DTNSIM_SCENARIO_DIR;
  ScenarioConfig c = parse_scenario(read_file(dir + "/yaan_default.cfg"));
  c.duration_s = until;
  return prepare_scenario(c, dir);
}

std::vector<NodeProfile> two_nodes(double bandwidth) {
  return {{Role::Source, 10'000'000, bandwidth}, {Role::Destination, 10'000'000, bandwidth}};
}

}  // namespace

TEST(Engine, ZeroDurationRunsNoSteps) {
  PreparedScenario p;
  p.config = stationary_config(600);
  p.config.duration_s = 0;
  p.overlays.resize(p.config.groups.size());
  const ReportBundle b = run(p);
  EXPECT_EQ(b.steps, 0u);
  EXPECT_EQ(b.metrics.created, 0u);
}

TEST(Engine, GeneratorCreates480OverFullRun) {
  PreparedScenario p = prepare_scenario(stationary_config(28800), ".");
  Simulation sim(p);
  const ReportBundle b = sim.run();
  EXPECT_EQ(b.steps, 288000u);
  EXPECT_EQ(b.metrics.created, 480u);
  const auto& msgs = sim.network().router().messages();
  ASSERT_EQ(msgs.size(), 480u);
  std::set<NodeId> srcs, dsts;
  for (std::size_t i = 0; i < msgs.size(); ++i) {
    srcs.insert(msgs[i].source);
    dsts.insert(msgs[i].destination);
    EXPECT_NEAR(msgs[i].created_at_s, 60.0 * static_cast<double>(i), 1e-6);
    EXPECT_GE(msgs[i].size_bytes, 10'000u);
    EXPECT_LE(msgs[i].size_bytes, 100'000u);
  }
  EXPECT_EQ(srcs, (std::set<NodeId>{2, 3, 4}));
  EXPECT_EQ(dsts, (std::set<NodeId>{0, 1}));
}

TEST(Engine, GeneratorSizeMean) {
  Rng rng(7, "generator");
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.uniform_int(10'000, 100'000));
  EXPECT_NEAR(sum / n, 55000.0, 0.02 * 55000.0);
}

TEST(Engine, ContactDownAbortsPartialTransfer) {
  Network net(RouterConfig{}, two_nodes(1000.0), true);
  net.contact_up(0, 1, 0.0);
  net.create_message(0, 1, 100'000, 0.0);
  net.run_transfers(0.0, 10.0);
  EXPECT_EQ(net.active_transfers(), 1u);
  net.contact_down(0, 1, 10.0);
  EXPECT_EQ(net.metrics().aborted, 1u);
  EXPECT_EQ(net.metrics().relayed, 0u);
  EXPECT_EQ(net.metrics().delivered, 0u);
  EXPECT_FALSE(net.router().delivered_at(1, 0));
  EXPECT_TRUE(net.router().buffer(0).contains(0));
  EXPECT_NE(net.routing_trace().find(",ABORT,M1,0,1,"), std::string::npos);
}

TEST(Engine, TransfersChainWithinOneWindow) {
  Network net(RouterConfig{}, two_nodes(1'000'000.0));
  for (int i = 0; i < 3; ++i) net.create_message(0, 1, 100'000, 0.0);
  net.contact_up(0, 1, 0.0);
  net.run_transfers(0.0, 0.25);
  EXPECT_EQ(net.metrics().delivered, 2u);
  EXPECT_EQ(net.metrics().relayed, 2u);
  ASSERT_EQ(net.metrics().delivery_records.size(), 2u);
  EXPECT_NEAR(net.metrics().delivery_records[0].delivered_at_s, 0.1, 1e-9);
  EXPECT_NEAR(net.metrics().delivery_records[1].delivered_at_s, 0.2, 1e-9);
  net.run_transfers(0.25, 0.5);
  EXPECT_EQ(net.metrics().delivered, 3u);
}

TEST(Engine, InfiniteBandwidthDeliversAtContactStart) {
  Network net(RouterConfig{}, two_nodes(std::numeric_limits<double>::infinity()));
  net.create_message(0, 1, 100'000, 0.0);
  net.contact_up(0, 1, 5.0);
  net.run_transfers(5.0, 5.1);
  ASSERT_EQ(net.metrics().delivery_records.size(), 1u);
  EXPECT_EQ(net.metrics().delivery_records[0].delivered_at_s, 5.0);
}

TEST(Engine, RecvNeverPrecedesItsSend) {
  for (auto proto : {Protocol::Epidemic, Protocol::SprayAndWait, Protocol::MaxProp}) {
    PreparedScenario p = bundled(3600);
    p.config.router.protocol = proto;
    RunOptions o;
    o.trace_routing = true;
    o.check_invariants = true;
    const ReportBundle b = run(p, o);
    std::map<std::string, double> send_at;  // message|from|to -> start
    std::istringstream in(b.routing_trace);
    std::string line;
    std::getline(in, line);
    std::size_t recvs = 0;
    while (std::getline(in, line)) {
      std::vector<std::string> f;
      std::stringstream ls(line);
      for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
      ASSERT_EQ(f.size(), 6u) << line;
      const std::string key = f[2] + "|" + f[3] + "|" + f[4];
      if (f[1] == "SEND") send_at[key] = std::stod(f[0]);
      if (f[1] == "RECV" || f[1] == "DELIVER") {
        ++recvs;
        ASSERT_TRUE(send_at.count(key)) << line;
        EXPECT_GE(std::stod(f[0]), send_at[key]) << line;
      }
    }
    EXPECT_GT(recvs, 0u) << to_string(proto);
  }
}

TEST(Engine, RunsAreDeterministic) {
  PreparedScenario p = bundled(1800);
  RunOptions o;
  o.trace_routing = true;
  o.trace_contacts = true;
  o.movement_sample_interval_s = 60;
  const ReportBundle a = run(p, o);
  const ReportBundle b = run(p, o);
  EXPECT_EQ(a.routing_trace, b.routing_trace);
  EXPECT_EQ(a.contact_trace, b.contact_trace);
  EXPECT_EQ(a.movement_trace, b.movement_trace);
  EXPECT_EQ(a.report_csv(), b.report_csv());
  p.config.rng_seed = 2;
  EXPECT_NE(run(p, o).movement_trace, a.movement_trace);
}

TEST(Engine, SameSeedSameMovementAcrossProtocols) {
  PreparedScenario p = bundled(900);
  RunOptions o;
  o.movement_sample_interval_s = 30;
  o.trace_contacts = true;
  const ReportBundle a = run(p, o);
  p.config.router.protocol = Protocol::MaxProp;
  const ReportBundle b = run(p, o);
  EXPECT_EQ(a.movement_trace, b.movement_trace);
  EXPECT_EQ(a.contact_trace, b.contact_trace);
}
