#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dtnsim/radio.hpp"
#include "dtnsim/rng.hpp"

using namespace dtnsim;

TEST(Radio, WithinRangeIsContact) {
  EXPECT_TRUE(in_range({0, 0}, {99, 0}, 100, 100, RangeRule::Max));
  EXPECT_TRUE(in_range({0, 0}, {100, 0}, 100, 100, RangeRule::Max));  // inclusive
  EXPECT_FALSE(in_range({0, 0}, {100.001, 0}, 100, 100, RangeRule::Max));
}

TEST(Radio, AsymmetricRangesUseMax) {
  EXPECT_TRUE(in_range({0, 0}, {300, 400}, 100, 600, RangeRule::Max));
  EXPECT_FALSE(in_range({0, 0}, {300, 400}, 100, 600, RangeRule::Min));
  EXPECT_EQ(link_range(100, 600, RangeRule::Max), 600.0);
}

TEST(Radio, LinkBandwidthIsMin) {
  EXPECT_EQ(link_bandwidth(7.5e6, 15e6), 7.5e6);
}

TEST(Radio, TrackerReportsUpsAndDowns) {
  ContactTracker t;
  std::vector<Point> pos{{0, 0}, {50, 0}, {1000, 0}};
  const std::vector<double> range{100, 100, 100};
  auto d = t.update(pos, range, RangeRule::Max);
  EXPECT_EQ(d.ups, (std::vector<NodePair>{{0, 1}}));
  EXPECT_TRUE(d.downs.empty());
  pos[1] = {950, 0};
  d = t.update(pos, range, RangeRule::Max);
  EXPECT_EQ(d.ups, (std::vector<NodePair>{{1, 2}}));
  EXPECT_EQ(d.downs, (std::vector<NodePair>{{0, 1}}));
}

TEST(Radio, GridMatchesBruteForce) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 130 + rng.below(200);
    std::vector<Point> pos;
    std::vector<double> range;
    for (std::size_t i = 0; i < n; ++i) {
      pos.push_back({rng.uniform(0, 3000), rng.uniform(0, 3000)});
      range.push_back(rng.below(10) == 0 ? 600.0 : 100.0);
    }
    // A few exact-boundary pairs.
    pos[1] = {pos[0].x + 100, pos[0].y};
    for (auto rule : {RangeRule::Max, RangeRule::Min}) {
      const auto a = contacts_bruteforce(pos, range, rule);
      const auto b = contacts_grid(pos, range, rule);
      ASSERT_EQ(a, b);
      for (const auto& p : a) ASSERT_LT(p.a, p.b);
    }
  }
}

TEST(Radio, TransferTimeIsSizeOverBandwidth) {
  TransferJob job;
  job.bytes_remaining = 100000;
  job.link_bandwidth = 7.5e6;
  EXPECT_NEAR(job.completion_time(), 0.013333333, 1e-9);
  auto r = advance_transfers({job}, 0.1, [](NodeId, NodeId) { return true; });
  ASSERT_EQ(r.completed.size(), 1u);
  EXPECT_NEAR(r.completed[0].second, 100000 / 7.5e6, 1e-15);
}

TEST(Radio, PartialProgressCarriesOver) {
  TransferJob job;
  job.bytes_remaining = 1e6;
  job.link_bandwidth = 7.5e6;
  auto r = advance_transfers({job}, 0.1, [](NodeId, NodeId) { return true; });
  ASSERT_EQ(r.active.size(), 1u);
  EXPECT_NEAR(r.active[0].bytes_remaining, 250000, 1e-6);
  r = advance_transfers(r.active, 0.2, [](NodeId, NodeId) { return true; });
  ASSERT_EQ(r.completed.size(), 1u);
  EXPECT_NEAR(r.completed[0].second, 1e6 / 7.5e6, 1e-12);
}

TEST(Radio, DeadLinkAborts) {
  TransferJob job;
  job.bytes_remaining = 1e6;
  job.link_bandwidth = 7.5e6;
  const auto r = advance_transfers({job}, 0.1, [](NodeId, NodeId) { return false; });
  EXPECT_EQ(r.aborted.size(), 1u);
  EXPECT_TRUE(r.completed.empty());
}

TEST(Radio, InfiniteBandwidthIsInstant) {
  TransferJob job;
  job.bytes_remaining = 1e9;
  job.link_bandwidth = std::numeric_limits<double>::infinity();
  job.cursor_s = 3.0;
  EXPECT_EQ(job.completion_time(), 3.0);
}
