#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "dtnsim/geometry.hpp"
#include "dtnsim/roadmap.hpp"
#include "dtnsim/units.hpp"

namespace dtnsim {

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

enum class Role { Source, Carrier, Destination };
enum class MovementKind { Stationary, ShortestPathMapBased };
enum class Protocol { Epidemic, SprayAndWait, MaxProp };
enum class SprayMode { Vanilla, Binary };
enum class RangeRule { Max, Min };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::Source: return "source";
    case Role::Carrier: return "carrier";
    case Role::Destination: return "destination";
  }
  return "?";
}
inline std::string_view to_string(MovementKind m) {
  return m == MovementKind::Stationary ? "stationary" : "shortest-path-map-based";
}
inline std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::Epidemic: return "epidemic";
    case Protocol::SprayAndWait: return "spray-and-wait";
    case Protocol::MaxProp: return "maxprop";
  }
  return "?";
}
inline std::string_view to_string(SprayMode m) { return m == SprayMode::Binary ? "binary" : "vanilla"; }
inline std::string_view to_string(RangeRule r) { return r == RangeRule::Max ? "max" : "min"; }
inline std::string_view to_string(RepairMode m) { return m == RepairMode::DropMinor ? "drop-minor" : "bridge"; }

inline std::optional<Protocol> parse_protocol(std::string_view s) {
  if (s == "epidemic") return Protocol::Epidemic;
  if (s == "spray-and-wait" || s == "snw" || s == "sprayandwait") return Protocol::SprayAndWait;
  if (s == "maxprop") return Protocol::MaxProp;
  return std::nullopt;
}

struct InterfaceProfile {
  double range_m = 100.0;
  double bandwidth_bytes_per_s = 7.5e6;

  friend bool operator==(const InterfaceProfile&, const InterfaceProfile&) = default;
};

struct GroupConfig {
  std::string name;
  std::uint32_t count = 1;
  Role role = Role::Carrier;
  MovementKind movement = MovementKind::ShortestPathMapBased;
  std::vector<Point> points;  // stationary placement, one per node
  std::string overlay_file;
  double speed_min_mps = 0.0;
  double speed_max_mps = 0.0;
  double wait_min_s = 0.0;
  double wait_max_s = 0.0;
  InterfaceProfile interface;
  std::uint64_t buffer_capacity_bytes = 5'000'000;

  friend bool operator==(const GroupConfig&, const GroupConfig&) = default;
};

struct RouterConfig {
  Protocol protocol = Protocol::Epidemic;
  std::uint32_t snw_initial_copies = 20;
  SprayMode snw_mode = SprayMode::Binary;
  std::uint32_t maxprop_hop_threshold = 3;
  std::optional<double> ttl_s;
  bool eviction = true;

  friend bool operator==(const RouterConfig&, const RouterConfig&) = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  double duration_s = 28800.0;
  double time_step_s = 0.1;
  std::uint64_t rng_seed = 1;
  double message_interval_s = 60.0;
  bool messages_per_source = false;
  std::uint64_t message_size_min_bytes = 10'000;
  std::uint64_t message_size_max_bytes = 100'000;
  double world_width_m = 12000.0;
  double world_height_m = 12000.0;
  std::string map_file;
  double snap_tolerance_m = 1.0;
  RepairMode repair = RepairMode::DropMinor;
  RangeRule range_rule = RangeRule::Max;
  std::vector<GroupConfig> groups;
  RouterConfig router;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

  std::uint32_t node_count() const {
    std::uint32_t n = 0;
    for (const auto& g : groups) n += g.count;
    return n;
  }

  // First node id of every group; ids are contiguous in declaration order.
  std::vector<std::uint32_t> group_offsets() const {
    std::vector<std::uint32_t> out;
    std::uint32_t next = 0;
    for (const auto& g : groups) {
      out.push_back(next);
      next += g.count;
    }
    return out;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_number(const std::string& s, int line, const std::string& key) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || s.empty() || !std::isfinite(v))
    throw ScenarioError(key + ": '" + s + "' is not a number", line);
  return v;
}

inline std::uint64_t parse_unsigned(const std::string& s, int line, const std::string& key) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc{} && ptr == s.data() + s.size() && !s.empty()) return v;
  // Accept integral values written in floating notation, e.g. 5e6.
  const double d = parse_number(s, line, key);
  if (d < 0 || d != std::floor(d) || d > 1.8e19)
    throw ScenarioError(key + ": '" + s + "' is not a non-negative integer", line);
  return static_cast<std::uint64_t>(d);
}

inline bool parse_bool(const std::string& s, int line, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ScenarioError(key + ": '" + s + "' is not a boolean", line);
}

inline std::pair<double, double> parse_range(const std::string& s, int line, const std::string& key) {
  auto parts = split(s, ',');
  if (parts.size() == 1) {
    const double v = parse_number(parts[0], line, key);
    return {v, v};
  }
  if (parts.size() != 2) throw ScenarioError(key + ": expected 'min, max'", line);
  return {parse_number(parts[0], line, key), parse_number(parts[1], line, key)};
}

inline std::vector<Point> parse_points(const std::string& s, int line, const std::string& key) {
  std::vector<Point> out;
  for (const auto& item : split(s, ';')) {
    if (item.empty()) continue;
    std::istringstream in(item);
    std::string xs, ys, extra;
    if (!(in >> xs >> ys) || (in >> extra)) throw ScenarioError(key + ": expected 'x y; x y; ...'", line);
    out.push_back({parse_number(xs, line, key), parse_number(ys, line, key)});
  }
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
};

inline void apply_group_key(GroupConfig& g, const std::string& field, const Entry& e,
                            const std::string& key) {
  const std::string& v = e.value;
  if (field == "name") {
    g.name = v;
  } else if (field == "count") {
    g.count = static_cast<std::uint32_t>(parse_unsigned(v, e.line, key));
  } else if (field == "role") {
    if (v == "source") g.role = Role::Source;
    else if (v == "carrier") g.role = Role::Carrier;
    else if (v == "destination") g.role = Role::Destination;
    else throw ScenarioError(key + ": unknown role '" + v + "'", e.line);
  } else if (field == "movement") {
    if (v == "stationary") g.movement = MovementKind::Stationary;
    else if (v == "shortest-path-map-based" || v == "ShortestPathMapBasedMovement")
      g.movement = MovementKind::ShortestPathMapBased;
    else throw ScenarioError(key + ": unknown movement model '" + v + "'", e.line);
  } else if (field == "points") {
    g.points = parse_points(v, e.line, key);
  } else if (field == "overlay") {
    g.overlay_file = v;
  } else if (field == "speed") {
    std::tie(g.speed_min_mps, g.speed_max_mps) = parse_range(v, e.line, key);
  } else if (field == "speedMph") {
    auto [lo, hi] = parse_range(v, e.line, key);
    try {
      g.speed_min_mps = mph_to_mps(lo);
      g.speed_max_mps = mph_to_mps(hi);
    } catch (const std::invalid_argument& ex) {
      throw ScenarioError(key + ": " + ex.what(), e.line);
    }
  } else if (field == "waitTime") {
    std::tie(g.wait_min_s, g.wait_max_s) = parse_range(v, e.line, key);
  } else if (field == "range") {
    g.interface.range_m = parse_number(v, e.line, key);
  } else if (field == "bandwidth") {
    g.interface.bandwidth_bytes_per_s = parse_number(v, e.line, key);
  } else if (field == "bufferSize") {
    g.buffer_capacity_bytes = parse_unsigned(v, e.line, key);
  } else {
    throw ScenarioError("unknown key '" + key + "'", e.line);
  }
}

inline void apply_key(ScenarioConfig& c, const std::string& key, const Entry& e) {
  const std::string& v = e.value;
  const int line = e.line;
  if (key == "Scenario.name") c.name = v;
  else if (key == "Scenario.endTime") c.duration_s = parse_number(v, line, key);
  else if (key == "Scenario.updateInterval") c.time_step_s = parse_number(v, line, key);
  else if (key == "Scenario.seed") c.rng_seed = parse_unsigned(v, line, key);
  else if (key == "Scenario.worldSize") std::tie(c.world_width_m, c.world_height_m) = parse_range(v, line, key);
  else if (key == "Scenario.mapFile") c.map_file = v;
  else if (key == "Scenario.snapTolerance") c.snap_tolerance_m = parse_number(v, line, key);
  else if (key == "Scenario.repair") {
    if (v == "drop-minor") c.repair = RepairMode::DropMinor;
    else if (v == "bridge") c.repair = RepairMode::Bridge;
    else throw ScenarioError(key + ": unknown repair mode '" + v + "'", line);
  } else if (key == "Scenario.rangeRule") {
    if (v == "max") c.range_rule = RangeRule::Max;
    else if (v == "min") c.range_rule = RangeRule::Min;
    else throw ScenarioError(key + ": expected max or min", line);
  } else if (key == "Messages.interval") c.message_interval_s = parse_number(v, line, key);
  else if (key == "Messages.perSource") c.messages_per_source = parse_bool(v, line, key);
  else if (key == "Messages.size") {
    auto [lo, hi] = parse_range(v, line, key);
    c.message_size_min_bytes = parse_unsigned(format_double(lo), line, key);
    c.message_size_max_bytes = parse_unsigned(format_double(hi), line, key);
  } else if (key == "Router.protocol") {
    auto p = parse_protocol(v);
    if (!p) throw ScenarioError(key + ": unknown protocol '" + v + "'", line);
    c.router.protocol = *p;
  } else if (key == "Router.copies") {
    c.router.snw_initial_copies = static_cast<std::uint32_t>(parse_unsigned(v, line, key));
  } else if (key == "Router.sprayMode") {
    if (v == "binary") c.router.snw_mode = SprayMode::Binary;
    else if (v == "vanilla") c.router.snw_mode = SprayMode::Vanilla;
    else throw ScenarioError(key + ": expected binary or vanilla", line);
  } else if (key == "Router.hopThreshold") {
    c.router.maxprop_hop_threshold = static_cast<std::uint32_t>(parse_unsigned(v, line, key));
  } else if (key == "Router.ttl") {
    if (v == "none" || v == "inf") c.router.ttl_s.reset();
    else c.router.ttl_s = parse_number(v, line, key);
  } else if (key == "Router.eviction") {
    c.router.eviction = parse_bool(v, line, key);
  } else {
    throw ScenarioError("unknown key '" + key + "'", line);
  }
}

}  // namespace detail

// Violated invariants are reported by name.
inline void validate(const ScenarioConfig& c) {
  auto fail = [](const std::string& what) { throw ScenarioError(what); };
  bool has_source = false, has_destination = false;
  for (const auto& g : c.groups) {
    has_source |= g.role == Role::Source;
    has_destination |= g.role == Role::Destination;
  }
  if (!has_source) fail("no source group");
  if (!has_destination) fail("no destination group");
  if (!(c.duration_s > 0)) fail("duration must be > 0");
  if (!(c.time_step_s > 0)) fail("time step must be > 0");
  if (!(c.message_interval_s > 0)) fail("message interval must be > 0");
  if (c.time_step_s > c.message_interval_s) fail("time step must not exceed the message interval");
  if (c.message_size_min_bytes > c.message_size_max_bytes) fail("message size min > max");
  if (c.message_size_min_bytes == 0) fail("message size must be positive");
  if (!(c.world_width_m > 0) || !(c.world_height_m > 0)) fail("world size must be positive");
  if (!(c.snap_tolerance_m >= 0)) fail("snap tolerance must be non-negative");
  if (c.router.snw_initial_copies < 1) fail("Router.copies must be >= 1");
  if (c.router.ttl_s && !(*c.router.ttl_s > 0)) fail("Router.ttl must be > 0");
  bool needs_map = false;
  for (std::size_t i = 0; i < c.groups.size(); ++i) {
    const auto& g = c.groups[i];
    const std::string where = "Group" + std::to_string(i + 1) + " (" + g.name + "): ";
    if (g.count < 1) fail(where + "count must be positive");
    if (g.speed_min_mps < 0 || g.speed_min_mps > g.speed_max_mps) fail(where + "speed min > max or negative");
    if (g.wait_min_s < 0 || g.wait_min_s > g.wait_max_s) fail(where + "wait time min > max or negative");
    if (!(g.interface.range_m > 0)) fail(where + "range must be > 0");
    if (!(g.interface.bandwidth_bytes_per_s > 0)) fail(where + "bandwidth must be > 0");
    if (g.movement == MovementKind::Stationary) {
      if (g.speed_max_mps != 0) fail(where + "stationary groups must have speed 0");
      if (g.points.size() != g.count) fail(where + "stationary groups need one point per node");
      for (const auto& p : g.points) {
        if (p.x < 0 || p.y < 0 || p.x > c.world_width_m || p.y > c.world_height_m)
          fail(where + "point outside the world bounds");
      }
    } else {
      needs_map = true;
      if (g.overlay_file.empty()) fail(where + "map-based movement needs an overlay file");
    }
  }
  if (needs_map && c.map_file.empty()) fail("Scenario.mapFile is required for map-based movement");
}

// Parses `key = value` lines. Group keys are `Group<N>.<field>`, N = 1..K
// contiguous. Unknown keys are rejected.
inline ScenarioConfig parse_scenario(std::string_view text,
                                     const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::map<std::string, detail::Entry> entries;
  std::vector<std::string> order;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ScenarioError("expected 'key = value'", line_no);
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ScenarioError("empty key", line_no);
    if (entries.count(key)) throw ScenarioError("duplicate key '" + key + "'", line_no);
    entries[key] = {value, line_no};
    order.push_back(key);
  }
  for (const auto& [key, value] : overrides) {
    if (!entries.count(key)) order.push_back(key);
    entries[key] = {value, 0};
  }

  ScenarioConfig c;
  std::map<std::uint32_t, std::vector<std::pair<std::string, detail::Entry>>> group_keys;
  for (const auto& key : order) {
    const auto& e = entries.at(key);
    if (key.rfind("Group", 0) == 0) {
      const auto dot = key.find('.');
      std::uint32_t n = 0;
      const char* first = key.data() + 5;
      const char* last = key.data() + (dot == std::string::npos ? key.size() : dot);
      auto [ptr, ec] = std::from_chars(first, last, n);
      if (dot == std::string::npos || ec != std::errc{} || ptr != last || n == 0)
        throw ScenarioError("unknown key '" + key + "'", e.line);
      group_keys[n].push_back({key, e});
    } else {
      detail::apply_key(c, key, e);
    }
  }
  std::uint32_t expected = 1;
  for (auto& [n, keys] : group_keys) {
    if (n != expected)
      throw ScenarioError("group numbers must be contiguous from 1; missing Group" + std::to_string(expected));
    ++expected;
    GroupConfig g;
    g.name = "group" + std::to_string(n);
    for (auto& [key, e] : keys) detail::apply_group_key(g, key.substr(key.find('.') + 1), e, key);
    c.groups.push_back(std::move(g));
  }
  validate(c);
  return c;
}

inline std::string serialize_scenario(const ScenarioConfig& c) {
  std::string out;
  auto put = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  auto pair = [](double a, double b) { return format_double(a) + ", " + format_double(b); };
  put("Scenario.name", c.name);
  put("Scenario.endTime", format_double(c.duration_s));
  put("Scenario.updateInterval", format_double(c.time_step_s));
  put("Scenario.seed", std::to_string(c.rng_seed));
  put("Scenario.worldSize", pair(c.world_width_m, c.world_height_m));
  if (!c.map_file.empty()) put("Scenario.mapFile", c.map_file);
  put("Scenario.snapTolerance", format_double(c.snap_tolerance_m));
  put("Scenario.repair", std::string(to_string(c.repair)));
  put("Scenario.rangeRule", std::string(to_string(c.range_rule)));
  put("Messages.interval", format_double(c.message_interval_s));
  put("Messages.perSource", c.messages_per_source ? "true" : "false");
  put("Messages.size", std::to_string(c.message_size_min_bytes) + ", " + std::to_string(c.message_size_max_bytes));
  put("Router.protocol", std::string(to_string(c.router.protocol)));
  put("Router.copies", std::to_string(c.router.snw_initial_copies));
  put("Router.sprayMode", std::string(to_string(c.router.snw_mode)));
  put("Router.hopThreshold", std::to_string(c.router.maxprop_hop_threshold));
  put("Router.ttl", c.router.ttl_s ? format_double(*c.router.ttl_s) : "none");
  put("Router.eviction", c.router.eviction ? "true" : "false");
  for (std::size_t i = 0; i < c.groups.size(); ++i) {
    const auto& g = c.groups[i];
    const std::string p = "Group" + std::to_string(i + 1) + ".";
    put(p + "name", g.name);
    put(p + "count", std::to_string(g.count));
    put(p + "role", std::string(to_string(g.role)));
    put(p + "movement", std::string(to_string(g.movement)));
    if (!g.points.empty()) {
      std::string pts;
      for (std::size_t k = 0; k < g.points.size(); ++k) {
        if (k) pts += "; ";
        pts += format_double(g.points[k].x) + " " + format_double(g.points[k].y);
      }
      put(p + "points", pts);
    }
    if (!g.overlay_file.empty()) put(p + "overlay", g.overlay_file);
    put(p + "speed", pair(g.speed_min_mps, g.speed_max_mps));
    put(p + "waitTime", pair(g.wait_min_s, g.wait_max_s));
    put(p + "range", format_double(g.interface.range_m));
    put(p + "bandwidth", format_double(g.interface.bandwidth_bytes_per_s));
    put(p + "bufferSize", std::to_string(g.buffer_capacity_bytes));
  }
  return out;
}

// Parses `key=value` from a --set argument.
inline std::pair<std::string, std::string> parse_override(std::string_view arg) {
  const auto eq = arg.find('=');
  if (eq == std::string_view::npos) throw ScenarioError("override '" + std::string(arg) + "' is not key=value");
  return {detail::trim(arg.substr(0, eq)), detail::trim(arg.substr(eq + 1))};
}

}  // namespace dtnsim
