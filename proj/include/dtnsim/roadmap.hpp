#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dtnsim/geometry.hpp"
#include "dtnsim/wkt.hpp"

namespace dtnsim {

using VertexId = std::uint32_t;

class MapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  VertexId a = 0;  // a < b
  VertexId b = 0;
  double length_m = 0.0;
};

struct Neighbor {
  VertexId vertex = 0;
  double length_m = 0.0;
};

// Undirected road graph. Immutable once built; vertex ids are dense and
// follow first-appearance order in the source polylines.
class RoadGraph {
 public:
  RoadGraph() = default;

  VertexId add_vertex(Point p) {
    vertices_.push_back(p);
    adjacency_.emplace_back();
    return static_cast<VertexId>(vertices_.size() - 1);
  }

  // Returns false for self-loops and duplicates.
  bool add_edge(VertexId u, VertexId v) {
    if (u == v) return false;
    if (u > v) std::swap(u, v);
    if (has_edge(u, v)) return false;
    const double len = distance(vertices_[u], vertices_[v]);
    edges_.push_back({u, v, len});
    insert_sorted(adjacency_[u], {v, len});
    insert_sorted(adjacency_[v], {u, len});
    return true;
  }

  bool has_edge(VertexId u, VertexId v) const {
    if (u >= adjacency_.size() || v >= adjacency_.size()) return false;
    const auto& adj = adjacency_[u];
    auto it = std::lower_bound(adj.begin(), adj.end(), v,
                               [](const Neighbor& n, VertexId id) { return n.vertex < id; });
    return it != adj.end() && it->vertex == v;
  }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return vertices_.empty(); }

  Point position(VertexId v) const { return vertices_.at(v); }
  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Neighbor>& neighbors(VertexId v) const { return adjacency_.at(v); }

  // Exact coordinate match, or nearest vertex within tolerance.
  std::optional<VertexId> find_vertex(Point p, double tolerance) const {
    std::optional<VertexId> best;
    double best_d2 = tolerance * tolerance;
    for (VertexId v = 0; v < vertices_.size(); ++v) {
      const double d2 = distance_sq(vertices_[v], p);
      if (d2 <= best_d2 && (!best || d2 < best_d2)) {
        best = v;
        best_d2 = d2;
      }
    }
    return best;
  }

  double total_length() const {
    double sum = 0.0;
    for (const auto& e : edges_) sum += e.length_m;
    return sum;
  }

 private:
  static void insert_sorted(std::vector<Neighbor>& adj, Neighbor n) {
    auto it = std::lower_bound(adj.begin(), adj.end(), n.vertex,
                               [](const Neighbor& x, VertexId id) { return x.vertex < id; });
    adj.insert(it, n);
  }

  std::vector<Point> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

namespace detail {

// Hash grid used to merge nearby endpoints while building.
class SnapIndex {
 public:
  explicit SnapIndex(double tolerance) : tol_(tolerance), cell_(std::max(tolerance, 1e-9)) {}

  std::optional<VertexId> find(const RoadGraph& g, Point p) const {
    const auto [cx, cy] = cell_of(p);
    std::optional<VertexId> best;
    double best_d2 = tol_ * tol_;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (VertexId v : it->second) {
          const double d2 = distance_sq(g.position(v), p);
          if (d2 < best_d2 || (d2 == best_d2 && (!best || v < *best))) {
            if (d2 <= tol_ * tol_) {
              best = v;
              best_d2 = d2;
            }
          }
        }
      }
    }
    return best;
  }

  void insert(Point p, VertexId v) {
    const auto [cx, cy] = cell_of(p);
    cells_[key(cx, cy)].push_back(v);
  }

 private:
  std::pair<std::int64_t, std::int64_t> cell_of(Point p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / cell_)),
            static_cast<std::int64_t>(std::floor(p.y / cell_))};
  }
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x) * 0x9E3779B97F4A7C15ull) ^ static_cast<std::uint64_t>(y);
  }

  double tol_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<VertexId>> cells_;
};

}  // namespace detail

// Consecutive points become edges. A point within snap_tolerance_m of an
// existing vertex merges into it (the vertex keeps its first coordinate).
// Single-point records are placement data and contribute nothing here.
inline RoadGraph build_graph(const std::vector<Polyline>& polylines, double snap_tolerance_m) {
  if (std::none_of(polylines.begin(), polylines.end(), [](const Polyline& p) { return p.size() >= 2; }))
    throw MapError("no line geometry to build a graph from");
  if (!(snap_tolerance_m >= 0.0)) throw MapError("snap tolerance must be non-negative");
  RoadGraph g;
  detail::SnapIndex index(snap_tolerance_m);
  auto intern = [&](Point p) {
    if (auto v = index.find(g, p)) return *v;
    const VertexId v = g.add_vertex(p);
    index.insert(p, v);
    return v;
  };
  for (const auto& line : polylines) {
    if (line.size() < 2) continue;
    VertexId prev = intern(line.front());
    for (std::size_t i = 1; i < line.size(); ++i) {
      const VertexId cur = intern(line[i]);
      g.add_edge(prev, cur);  // zero-length and repeated segments are dropped
      prev = cur;
    }
  }
  return g;
}

struct Components {
  std::vector<std::uint32_t> label;  // per vertex
  std::vector<std::size_t> sizes;    // per component, ordered by lowest member id
};

inline Components connected_components(const RoadGraph& g) {
  Components c;
  constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
  c.label.assign(g.vertex_count(), kUnset);
  for (VertexId s = 0; s < g.vertex_count(); ++s) {
    if (c.label[s] != kUnset) continue;
    const auto id = static_cast<std::uint32_t>(c.sizes.size());
    c.sizes.push_back(0);
    std::vector<VertexId> stack{s};
    c.label[s] = id;
    while (!stack.empty()) {
      const VertexId v = stack.back();
      stack.pop_back();
      ++c.sizes[id];
      for (const auto& n : g.neighbors(v)) {
        if (c.label[n.vertex] == kUnset) {
          c.label[n.vertex] = id;
          stack.push_back(n.vertex);
        }
      }
    }
  }
  return c;
}

inline bool is_connected(const RoadGraph& g) {
  return !g.empty() && connected_components(g).sizes.size() == 1;
}

enum class RepairMode { DropMinor, Bridge };

struct RepairReport {
  std::vector<std::size_t> component_sizes;  // before repair
  std::size_t dropped_vertices = 0;
  std::size_t dropped_edges = 0;
  std::size_t bridges_added = 0;

  bool empty() const { return component_sizes.size() <= 1; }

  std::string summary() const {
    if (empty()) return "graph already connected";
    std::string s = std::to_string(component_sizes.size()) + " components (sizes";
    for (auto n : component_sizes) s += " " + std::to_string(n);
    s += ")";
    if (bridges_added) s += "; bridged " + std::to_string(bridges_added) + " components";
    if (dropped_vertices)
      s += "; dropped " + std::to_string(dropped_vertices) + " vertices, " +
           std::to_string(dropped_edges) + " edges";
    return s;
  }
};

struct RepairResult {
  RoadGraph graph;
  RepairReport report;
};

inline RepairResult repair_connectivity(const RoadGraph& g, RepairMode mode = RepairMode::DropMinor) {
  if (g.empty()) throw MapError("cannot repair an empty graph");
  const Components comps = connected_components(g);
  RepairResult result;
  if (comps.sizes.size() <= 1) {
    result.graph = g;
    result.report.component_sizes = comps.sizes;
    return result;
  }
  result.report.component_sizes = comps.sizes;
  // Largest component wins; ties go to the one holding the lowest vertex id.
  const auto main = static_cast<std::uint32_t>(
      std::max_element(comps.sizes.begin(), comps.sizes.end()) - comps.sizes.begin());

  if (mode == RepairMode::DropMinor) {
    std::vector<VertexId> remap(g.vertex_count(), std::numeric_limits<VertexId>::max());
    RoadGraph out;
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      if (comps.label[v] == main) remap[v] = out.add_vertex(g.position(v));
    }
    std::size_t kept_edges = 0;
    for (const auto& e : g.edges()) {
      if (comps.label[e.a] == main) {
        out.add_edge(remap[e.a], remap[e.b]);
        ++kept_edges;
      }
    }
    result.report.dropped_vertices = g.vertex_count() - out.vertex_count();
    result.report.dropped_edges = g.edge_count() - kept_edges;
    result.graph = std::move(out);
    return result;
  }

  RoadGraph out = g;
  std::vector<bool> in_main(g.vertex_count());
  for (VertexId v = 0; v < g.vertex_count(); ++v) in_main[v] = comps.label[v] == main;
  for (std::uint32_t c = 0; c < comps.sizes.size(); ++c) {
    if (c == main) continue;
    double best = std::numeric_limits<double>::infinity();
    VertexId best_minor = 0;
    VertexId best_main = 0;
    for (VertexId u = 0; u < g.vertex_count(); ++u) {
      if (comps.label[u] != c) continue;
      for (VertexId v = 0; v < g.vertex_count(); ++v) {
        if (!in_main[v]) continue;
        const double d2 = distance_sq(g.position(u), g.position(v));
        if (d2 < best) {
          best = d2;
          best_minor = u;
          best_main = v;
        }
      }
    }
    out.add_edge(best_minor, best_main);
    ++result.report.bridges_added;
    for (VertexId u = 0; u < g.vertex_count(); ++u)
      if (comps.label[u] == c) in_main[u] = true;
  }
  result.graph = std::move(out);
  return result;
}

struct Path {
  std::vector<VertexId> vertices;
  double length_m = 0.0;
};

// Single-source distances over the graph (Dijkstra).
inline std::vector<double> distances_from(const RoadGraph& g, VertexId source) {
  std::vector<double> dist(g.vertex_count(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.push({0.0, source});
  while (!queue.empty()) {
    auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (const auto& n : g.neighbors(v)) {
      const double nd = d + n.length_m;
      if (nd < dist[n.vertex]) {
        dist[n.vertex] = nd;
        queue.push({nd, n.vertex});
      }
    }
  }
  return dist;
}

// Minimal-length path; among equal-length paths the one whose vertex-id
// sequence is lexicographically smallest. Distances are computed towards the
// target, then the walk from the source takes the smallest neighbour id that
// stays on a shortest path.
inline Path shortest_path(const RoadGraph& g, VertexId from, VertexId to) {
  if (from >= g.vertex_count() || to >= g.vertex_count()) throw MapError("vertex not found");
  Path path;
  path.vertices.push_back(from);
  if (from == to) return path;
  const std::vector<double> to_target = distances_from(g, to);
  if (!std::isfinite(to_target[from])) throw MapError("no path between vertices");
  VertexId v = from;
  while (v != to) {
    const double remaining = to_target[v];
    const double slack = 1e-9 * std::max(1.0, remaining);
    std::optional<VertexId> next;
    double step = 0.0;
    for (const auto& n : g.neighbors(v)) {  // ascending id
      if (std::abs(n.length_m + to_target[n.vertex] - remaining) <= slack && to_target[n.vertex] < remaining) {
        next = n.vertex;
        step = n.length_m;
        break;
      }
    }
    if (!next) throw MapError("inconsistent distance labels");
    v = *next;
    path.length_m += step;
    path.vertices.push_back(v);
  }
  return path;
}

// Overlay geometry snapped onto the base graph. Every overlay point must land
// on a base vertex and every overlay segment must be a base edge.
inline RoadGraph build_overlay(const RoadGraph& base, const std::vector<Polyline>& polylines,
                               double snap_tolerance_m, const std::string& label = "overlay") {
  std::vector<Polyline> snapped;
  for (const auto& line : polylines) {
    if (line.size() < 2) continue;
    Polyline s;
    for (const Point& p : line) {
      auto v = base.find_vertex(p, snap_tolerance_m);
      if (!v)
        throw MapError(label + ": point (" + format_double(p.x) + ", " + format_double(p.y) +
                       ") is not on the base map");
      s.push_back(base.position(*v));
    }
    snapped.push_back(std::move(s));
  }
  if (snapped.empty()) throw MapError(label + ": no line geometry");
  RoadGraph overlay = build_graph(snapped, 0.0);
  for (const auto& e : overlay.edges()) {
    const auto a = base.find_vertex(overlay.position(e.a), 0.0);
    const auto b = base.find_vertex(overlay.position(e.b), 0.0);
    if (!a || !b || !base.has_edge(*a, *b))
      throw MapError(label + ": segment " + wkt_coordinate(overlay.position(e.a)) + " - " +
                     wkt_coordinate(overlay.position(e.b)) + " is not a base map edge");
  }
  if (!is_connected(overlay)) throw MapError(label + ": overlay is not connected");
  return overlay;
}

// One LINESTRING per edge in edge order; byte-stable for a given graph.
inline std::string graph_to_wkt(const RoadGraph& g) {
  std::string out;
  for (const auto& e : g.edges()) {
    out += wkt_linestring({g.position(e.a), g.position(e.b)});
    out += '\n';
  }
  return out;
}

}  // namespace dtnsim
