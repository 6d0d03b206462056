#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dtnsim/geometry.hpp"
#include "dtnsim/scenario.hpp"

namespace dtnsim {

using NodeId = std::uint32_t;

struct NodePair {
  NodeId a = 0;  // a < b
  NodeId b = 0;

  friend bool operator==(const NodePair&, const NodePair&) = default;
  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

inline NodePair make_pair_ordered(NodeId x, NodeId y) { return x < y ? NodePair{x, y} : NodePair{y, x}; }

inline double link_range(double range_a, double range_b, RangeRule rule) {
  return rule == RangeRule::Max ? std::max(range_a, range_b) : std::min(range_a, range_b);
}

inline double link_bandwidth(double bw_a, double bw_b) { return std::min(bw_a, bw_b); }

inline bool in_range(Point pa, Point pb, double range_a, double range_b, RangeRule rule) {
  const double r = link_range(range_a, range_b, rule);
  return distance_sq(pa, pb) <= r * r;
}

// All pairs within range, sorted. Brute force over every pair.
inline std::vector<NodePair> contacts_bruteforce(std::span<const Point> pos, std::span<const double> range,
                                                 RangeRule rule) {
  std::vector<NodePair> out;
  const auto n = static_cast<NodeId>(pos.size());
  for (NodeId a = 0; a < n; ++a) {
    for (NodeId b = a + 1; b < n; ++b) {
      if (in_range(pos[a], pos[b], range[a], range[b], rule)) out.push_back({a, b});
    }
  }
  return out;
}

// Same relation through a uniform grid with cells as wide as the largest
// range, so only neighbouring cells need checking.
inline std::vector<NodePair> contacts_grid(std::span<const Point> pos, std::span<const double> range,
                                           RangeRule rule) {
  std::vector<NodePair> out;
  if (pos.empty()) return out;
  const double cell = std::max(1.0, *std::max_element(range.begin(), range.end()));
  auto coord = [cell](double v) { return static_cast<std::int64_t>(std::floor(v / cell)); };
  auto key = [](std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x) << 32) ^ static_cast<std::uint64_t>(y & 0xFFFFFFFF);
  };
  std::unordered_map<std::uint64_t, std::vector<NodeId>> cells;
  for (NodeId i = 0; i < pos.size(); ++i) cells[key(coord(pos[i].x), coord(pos[i].y))].push_back(i);
  for (NodeId a = 0; a < pos.size(); ++a) {
    const auto cx = coord(pos[a].x);
    const auto cy = coord(pos[a].y);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = cells.find(key(cx + dx, cy + dy));
        if (it == cells.end()) continue;
        for (NodeId b : it->second) {
          if (b > a && in_range(pos[a], pos[b], range[a], range[b], rule)) out.push_back({a, b});
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline constexpr std::size_t kGridThreshold = 128;

struct ContactDelta {
  std::vector<NodePair> ups;
  std::vector<NodePair> downs;
};

// Tracks the live contact set between steps.
class ContactTracker {
 public:
  ContactDelta update(std::span<const Point> pos, std::span<const double> range, RangeRule rule) {
    std::vector<NodePair> now = pos.size() > kGridThreshold ? contacts_grid(pos, range, rule)
                                                            : contacts_bruteforce(pos, range, rule);
    ContactDelta d;
    std::set_difference(now.begin(), now.end(), live_.begin(), live_.end(), std::back_inserter(d.ups));
    std::set_difference(live_.begin(), live_.end(), now.begin(), now.end(), std::back_inserter(d.downs));
    live_ = std::move(now);
    return d;
  }

  const std::vector<NodePair>& live() const { return live_; }

 private:
  std::vector<NodePair> live_;
};

struct TransferJob {
  std::uint32_t message = 0;
  NodeId sender = 0;
  NodeId receiver = 0;
  double bytes_remaining = 0.0;
  double link_bandwidth = 0.0;  // bytes/s; infinity means instantaneous
  double started_at_s = 0.0;
  double cursor_s = 0.0;        // time up to which bytes_remaining is current
  std::uint32_t hop_count = 0;  // of the sender's copy when the job started
  std::uint32_t copies = 0;

  double completion_time() const {
    if (std::isinf(link_bandwidth)) return cursor_s;
    return cursor_s + bytes_remaining / link_bandwidth;
  }
};

struct TransferAdvance {
  std::vector<std::pair<TransferJob, double>> completed;  // job, completion time
  std::vector<TransferJob> aborted;
  std::vector<TransferJob> active;
};

// Moves every job forward to `until_s`. Jobs whose link is no longer live are
// aborted (the partial copy is discarded); jobs whose last byte arrives by
// `until_s` complete at their exact completion time.
template <typename IsLive>
TransferAdvance advance_transfers(std::vector<TransferJob> jobs, double until_s, IsLive&& is_live) {
  TransferAdvance out;
  for (auto& job : jobs) {
    if (!is_live(job.sender, job.receiver)) {
      out.aborted.push_back(job);
      continue;
    }
    const double done_at = job.completion_time();
    if (done_at <= until_s) {
      job.bytes_remaining = 0.0;
      job.cursor_s = done_at;
      out.completed.emplace_back(job, done_at);
    } else {
      job.bytes_remaining -= job.link_bandwidth * (until_s - job.cursor_s);
      job.cursor_s = until_s;
      out.active.push_back(job);
    }
  }
  return out;
}

}  // namespace dtnsim
