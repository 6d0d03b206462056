#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dtnsim/geometry.hpp"
#include "dtnsim/rng.hpp"
#include "dtnsim/wkt.hpp"

namespace dtnsim {

// Desk-scale stand-in for a mountain town: a ring highway through the hills
// (with dead-end mountain spurs), a town-centre street grid joined to the
// ring by connector roads, and a river along the north edge that touches the
// highway at two places. Coordinates are laid out for a 12 km x 12 km world
// and scaled to the requested size.
struct MapGenParams {
  double width_m = 12000.0;
  double height_m = 12000.0;
  std::uint64_t seed = 1;
  double segment_m = 500.0;      // target road segment length
  double jitter_m = 60.0;        // lateral wobble of interior road points
  double grid_spacing_m = 500.0;
};

struct GeneratedMap {
  std::vector<Polyline> ring;
  std::vector<Polyline> spurs;
  std::vector<Polyline> connectors;
  std::vector<Polyline> town;
  std::vector<Polyline> river;
  std::vector<Polyline> pier;
  std::vector<Point> town_vertices;
  std::vector<Point> stations;

  static std::string to_wkt(std::initializer_list<const std::vector<Polyline>*> parts) {
    std::string out;
    for (const auto* part : parts)
      for (const auto& line : *part) out += wkt_linestring(line) + "\n";
    return out;
  }

  std::string base_wkt() const { return to_wkt({&ring, &spurs, &connectors, &town, &river, &pier}); }
  std::string truck_wkt() const { return to_wkt({&ring, &spurs}); }
  std::string pedestrian_wkt() const { return to_wkt({&town}); }
  std::string vehicle_wkt() const { return to_wkt({&ring, &connectors, &town}); }
  std::string freighter_wkt() const { return to_wkt({&river}); }
  std::string stations_wkt() const {
    std::string out;
    for (const auto& p : stations) out += wkt_point(p) + "\n";
    return out;
  }
};

namespace detail {

inline Point round_point(Point p) {
  return {std::round(p.x * 10.0) / 10.0, std::round(p.y * 10.0) / 10.0};
}

// Splits a -> b into pieces of roughly `segment` metres and wobbles the
// interior points sideways. End points stay exact so roads join cleanly.
inline Polyline winding_road(Point a, Point b, double segment, double jitter, Rng& rng) {
  const double len = distance(a, b);
  const int pieces = std::max(1, static_cast<int>(std::round(len / segment)));
  const double nx = -(b.y - a.y) / len;
  const double ny = (b.x - a.x) / len;
  Polyline line{a};
  for (int i = 1; i < pieces; ++i) {
    const double t = static_cast<double>(i) / pieces;
    const double off = rng.uniform(-jitter, jitter);
    line.push_back(round_point({a.x + (b.x - a.x) * t + nx * off, a.y + (b.y - a.y) * t + ny * off}));
  }
  line.push_back(b);
  return line;
}

}  // namespace detail

inline GeneratedMap generate_map(const MapGenParams& params) {
  const double sx = params.width_m / 12000.0;
  const double sy = params.height_m / 12000.0;
  auto at = [&](double x, double y) { return detail::round_point({x * sx, y * sy}); };
  Rng rng(params.seed, "mapgen");
  const double seg = params.segment_m;
  const double jit = params.jitter_m;
  GeneratedMap map;

  const std::vector<Point> ring_corners = {at(1500, 1800), at(5000, 1300),  at(9300, 1300),
                                           at(10800, 3500), at(10900, 7500), at(8800, 9900),
                                           at(5180, 10000), at(2200, 9600),  at(1100, 5800)};
  for (std::size_t i = 0; i < ring_corners.size(); ++i) {
    map.ring.push_back(detail::winding_road(ring_corners[i], ring_corners[(i + 1) % ring_corners.size()], seg, jit, rng));
  }

  // Dead-end mountain roads and tunnels only the trucks use.
  map.spurs.push_back(detail::winding_road(ring_corners[0], at(400, 500), seg, jit, rng));
  map.spurs.push_back(detail::winding_road(ring_corners[3], at(11700, 2200), seg, jit, rng));
  map.spurs.push_back(detail::winding_road(ring_corners[8], at(300, 4200), seg, jit, rng));

  // Town centre street grid.
  const double x0 = 4500, x1 = 8000, y0 = 4000, y1 = 7500;
  const double step = params.grid_spacing_m;
  const int nx = static_cast<int>(std::round((x1 - x0) / step));
  const int ny = static_cast<int>(std::round((y1 - y0) / step));
  for (int j = 0; j <= ny; ++j) {
    Polyline row;
    for (int i = 0; i <= nx; ++i) row.push_back(at(x0 + i * step, y0 + j * step));
    map.town.push_back(row);
  }
  for (int i = 0; i <= nx; ++i) {
    Polyline col;
    for (int j = 0; j <= ny; ++j) col.push_back(at(x0 + i * step, y0 + j * step));
    map.town.push_back(col);
  }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) map.town_vertices.push_back(at(x0 + i * step, y0 + j * step));

  // Connector roads between the ring and the town edge.
  map.connectors.push_back(detail::winding_road(ring_corners[1], at(5000, 4000), seg, jit, rng));
  map.connectors.push_back(detail::winding_road(ring_corners[4], at(8000, 7500), seg, jit, rng));
  map.connectors.push_back(detail::winding_road(ring_corners[6], at(5000, 7500), seg, jit, rng));
  map.connectors.push_back(detail::winding_road(ring_corners[8], at(4500, 5500), seg, jit, rng));

  // River along the north edge, close to the highway near both bends.
  const std::vector<Point> river_points = {at(600, 11300), at(2200, 9680), at(3800, 10500),
                                           at(5180, 10750), at(7000, 10600), at(8800, 9980),
                                           at(10200, 10700), at(11400, 10400)};
  Polyline river{river_points.front()};
  for (std::size_t i = 1; i < river_points.size(); ++i) {
    Polyline part = detail::winding_road(river_points[i - 1], river_points[i], seg, jit * 0.5, rng);
    river.insert(river.end(), part.begin() + 1, part.end());
  }
  map.river.push_back(river);
  map.pier.push_back({ring_corners[7], river_points[1]});

  map.stations = {at(9600, 1000), at(5180, 10393)};
  return map;
}

}  // namespace dtnsim
