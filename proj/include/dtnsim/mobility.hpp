#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "dtnsim/geometry.hpp"
#include "dtnsim/rng.hpp"
#include "dtnsim/roadmap.hpp"
#include "dtnsim/scenario.hpp"

namespace dtnsim {

struct MobilityState {
  Point position;
  std::vector<VertexId> route;  // remaining waypoints, next first
  std::size_t next_waypoint = 0;
  VertexId last_vertex = 0;     // most recently reached overlay vertex
  double leg_speed_mps = 0.0;
  double wait_until_s = 0.0;
  bool stationary = false;

  bool route_empty() const { return next_waypoint >= route.size(); }
};

// Per-group movement parameters consumed by step().
struct MovementProfile {
  double speed_min_mps = 0.0;
  double speed_max_mps = 0.0;
  double wait_min_s = 0.0;
  double wait_max_s = 0.0;

  static MovementProfile from(const GroupConfig& g) {
    return {g.speed_min_mps, g.speed_max_mps, g.wait_min_s, g.wait_max_s};
  }
};

// Shortest paths on one overlay, memoised per target vertex. Not thread
// safe; each simulation owns its own router.
class OverlayRouter {
 public:
  explicit OverlayRouter(const RoadGraph& overlay) : overlay_(&overlay) {}

  const RoadGraph& graph() const { return *overlay_; }

  std::vector<VertexId> route(VertexId from, VertexId to) {
    if (from == to) return {from};
    auto it = to_target_.find(to);
    if (it == to_target_.end()) it = to_target_.emplace(to, distances_from(*overlay_, to)).first;
    const auto& dist = it->second;
    std::vector<VertexId> path{from};
    VertexId v = from;
    while (v != to) {
      const double remaining = dist[v];
      const double slack = 1e-9 * std::max(1.0, remaining);
      bool advanced = false;
      for (const auto& n : overlay_->neighbors(v)) {
        if (dist[n.vertex] < remaining && std::abs(n.length_m + dist[n.vertex] - remaining) <= slack) {
          v = n.vertex;
          path.push_back(v);
          advanced = true;
          break;
        }
      }
      if (!advanced) throw MapError("overlay is not connected");
    }
    return path;
  }

 private:
  const RoadGraph* overlay_;
  std::unordered_map<VertexId, std::vector<double>> to_target_;
};

inline MobilityState init_stationary(Point p) {
  MobilityState s;
  s.position = p;
  s.stationary = true;
  return s;
}

inline MobilityState init_position(const RoadGraph& overlay, Rng& rng) {
  if (overlay.empty()) throw MapError("cannot place a node on an empty overlay");
  MobilityState s;
  s.last_vertex = static_cast<VertexId>(rng.below(overlay.vertex_count()));
  s.position = overlay.position(s.last_vertex);
  return s;
}

// Advances one node from now_s to now_s + dt_s. A new route (uniform random
// destination vertex, one speed per route) is planned whenever the previous
// one is exhausted; arriving at the destination starts a uniform wait.
inline void step(MobilityState& s, OverlayRouter& router, const MovementProfile& profile, double now_s,
                 double dt_s, Rng& rng) {
  if (s.stationary) return;
  const RoadGraph& overlay = router.graph();
  double t = now_s;
  const double end = now_s + dt_s;
  // Bounded so a degenerate profile (zero speed, single vertex) cannot spin.
  for (int guard = 0; t < end && guard < 64; ++guard) {
    if (s.wait_until_s > t) {
      t = std::min(s.wait_until_s, end);
      continue;
    }
    if (s.route_empty()) {
      if (overlay.vertex_count() < 2) return;
      const auto dest = static_cast<VertexId>(rng.below(overlay.vertex_count()));
      s.route = router.route(s.last_vertex, dest);
      s.next_waypoint = 1;
      s.leg_speed_mps = rng.uniform(profile.speed_min_mps, profile.speed_max_mps);
      if (s.route_empty()) {
        s.wait_until_s = t + rng.uniform(profile.wait_min_s, profile.wait_max_s);
        continue;
      }
    }
    if (!(s.leg_speed_mps > 0)) return;
    while (t < end && !s.route_empty()) {
      const VertexId target = s.route[s.next_waypoint];
      const Point goal = overlay.position(target);
      const double gap = distance(s.position, goal);
      const double reach = s.leg_speed_mps * (end - t);
      if (reach >= gap) {
        s.position = goal;
        t += gap / s.leg_speed_mps;
        s.last_vertex = target;
        ++s.next_waypoint;
      } else {
        const double f = reach / gap;
        s.position.x += (goal.x - s.position.x) * f;
        s.position.y += (goal.y - s.position.y) * f;
        t = end;
      }
    }
    if (s.route_empty() && t < end) {
      s.wait_until_s = t + rng.uniform(profile.wait_min_s, profile.wait_max_s);
    } else if (s.route_empty()) {
      s.wait_until_s = end + rng.uniform(profile.wait_min_s, profile.wait_max_s);
    }
  }
}

}  // namespace dtnsim
