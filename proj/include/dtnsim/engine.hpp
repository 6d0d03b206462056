#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtnsim/metrics.hpp"
#include "dtnsim/mobility.hpp"
#include "dtnsim/radio.hpp"
#include "dtnsim/rng.hpp"
#include "dtnsim/roadmap.hpp"
#include "dtnsim/routing.hpp"
#include "dtnsim/scenario.hpp"

namespace dtnsim {

class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

// Config plus the repaired base map and every group's overlay. Read-only
// once built, so concurrent runs can share it.
struct PreparedScenario {
  ScenarioConfig config;
  std::shared_ptr<const RoadGraph> base;
  RepairReport repair;
  std::vector<std::shared_ptr<const RoadGraph>> overlays;  // per group; null when stationary
};

inline PreparedScenario prepare_scenario(const ScenarioConfig& config, const std::filesystem::path& base_dir) {
  validate(config);
  PreparedScenario p;
  p.config = config;
  p.overlays.resize(config.groups.size());
  const bool needs_map = std::any_of(config.groups.begin(), config.groups.end(), [](const GroupConfig& g) {
    return g.movement == MovementKind::ShortestPathMapBased;
  });
  if (!needs_map) return p;

  auto resolve = [&](const std::string& f) {
    std::filesystem::path path(f);
    return path.is_absolute() ? path : base_dir / path;
  };
  auto check_bounds = [&](const RoadGraph& g, const std::string& label) {
    for (const Point& v : g.vertices()) {
      if (v.x < 0 || v.y < 0 || v.x > config.world_width_m || v.y > config.world_height_m)
        throw MapError(label + ": vertex " + wkt_coordinate(v) + " lies outside the world bounds");
    }
  };
  const RoadGraph raw = build_graph(parse_wkt(read_file(resolve(config.map_file))), config.snap_tolerance_m);
  check_bounds(raw, config.map_file);
  RepairResult repaired = repair_connectivity(raw, config.repair);
  p.repair = repaired.report;
  p.base = std::make_shared<const RoadGraph>(std::move(repaired.graph));

  std::map<std::string, std::shared_ptr<const RoadGraph>> cache;
  for (std::size_t i = 0; i < config.groups.size(); ++i) {
    const auto& g = config.groups[i];
    if (g.movement != MovementKind::ShortestPathMapBased) continue;
    auto& slot = cache[g.overlay_file];
    if (!slot) {
      slot = std::make_shared<const RoadGraph>(build_overlay(
          *p.base, parse_wkt(read_file(resolve(g.overlay_file))), config.snap_tolerance_m, g.overlay_file));
    }
    p.overlays[i] = slot;
  }
  return p;
}

struct NodeProfile {
  Role role = Role::Carrier;
  std::uint64_t buffer_capacity_bytes = 0;
  double bandwidth_bytes_per_s = 0.0;
};

// Counters for the optional runtime assertions.
struct InvariantStats {
  std::uint64_t copy_checks = 0;
  std::uint64_t likelihood_checks = 0;
  std::uint64_t ack_checks = 0;
  std::uint64_t buffer_checks = 0;
};

// Live contacts, link scheduling and routing callbacks. Driven either by the
// mobility-based Simulation or directly by a scripted contact trace.
class Network {
 public:
  Network(RouterConfig router_config, const std::vector<NodeProfile>& nodes, bool record_trace = false,
          bool check_invariants = false)
      : router_(router_config, router_setup(nodes)),
        profiles_(nodes),
        contacts_(nodes.size()),
        busy_(nodes.size(), false),
        record_trace_(record_trace),
        check_(check_invariants) {
    router_.set_sink([this](const RoutingEvent& e) { log(e); });
  }

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  Router& router() { return router_; }
  const Router& router() const { return router_; }
  const MetricsAccumulator& metrics() const { return metrics_; }
  const std::string& routing_trace() const { return trace_; }
  const InvariantStats& invariant_stats() const { return stats_; }
  std::size_t active_transfers() const { return jobs_.size(); }
  bool linked(NodeId a, NodeId b) const { return find_contact(a, b) != nullptr; }

  void contact_up(NodeId a, NodeId b, double now_s) {
    if (a == b || linked(a, b)) return;
    insert_contact(a, b);
    insert_contact(b, a);
    router_.on_contact_up(a, b, now_s);
    // Summary vectors: what each side holds at contact-up. Copies a peer
    // evicts later in the same contact are not offered back to it.
    contact_entry(a, b).peer_summary = router_.buffer(b).held();
    contact_entry(b, a).peer_summary = router_.buffer(a).held();
    if (check_ && router_.config().protocol == Protocol::MaxProp) check_maxprop_pair(a, b);
  }

  void contact_down(NodeId a, NodeId b, double now_s) {
    if (!linked(a, b)) return;
    erase_contact(a, b);
    erase_contact(b, a);
    std::vector<TransferJob> keep;
    for (auto& job : jobs_) {
      if (make_pair_ordered(job.sender, job.receiver) == make_pair_ordered(a, b)) {
        ++metrics_.aborted;
        busy_[job.sender] = busy_[job.receiver] = false;
        log({now_s, EventKind::Abort, job.message, job.sender, job.receiver, job.hop_count});
      } else {
        keep.push_back(job);
      }
    }
    jobs_ = std::move(keep);
  }

  MessageIndex create_message(NodeId source, NodeId destination, std::uint64_t size, double now_s) {
    const auto [m, stored] = router_.create_message(source, destination, size, now_s);
    ++metrics_.created;
    if (check_) check_copies(m);
    (void)stored;
    return m;
  }

  void expire(double now_s) { router_.expire(now_s); }

  // Runs the links over [t0, t1): idle pairs start their head intent, jobs
  // complete in time order and free both interfaces for the next transfer.
  void run_transfers(double t0, double t1) {
    double now = t0;
    for (;;) {
      start_jobs(now);
      auto next = std::min_element(jobs_.begin(), jobs_.end(), [](const TransferJob& x, const TransferJob& y) {
        const double cx = x.completion_time(), cy = y.completion_time();
        if (cx != cy) return cx < cy;
        return x.sender < y.sender;
      });
      if (next == jobs_.end() || next->completion_time() > t1) break;
      const TransferJob job = *next;
      jobs_.erase(next);
      now = std::max(now, job.completion_time());
      complete(job, now);
    }
    auto advanced = advance_transfers(std::move(jobs_), t1, [](NodeId, NodeId) { return true; });
    jobs_ = std::move(advanced.active);
  }

  // Full sweep of the runtime assertions (buffers, copy budgets).
  void check_all() {
    for (NodeId n = 0; n < profiles_.size(); ++n) {
      const auto& b = router_.buffer(n);
      ++stats_.buffer_checks;
      if (b.used() > b.capacity()) throw InvariantViolation("buffer over capacity at node " + std::to_string(n));
    }
    if (router_.config().protocol == Protocol::SprayAndWait)
      for (MessageIndex m = 0; m < router_.messages().size(); ++m) check_copies(m);
  }

 private:
  struct ContactEntry {
    NodeId peer = 0;
    std::uint64_t self_version = ~std::uint64_t{0};
    std::uint64_t peer_version = ~std::uint64_t{0};
    MessageSet peer_summary;
  };

  static std::vector<RouterNodeSetup> router_setup(const std::vector<NodeProfile>& nodes) {
    std::vector<RouterNodeSetup> out;
    for (const auto& n : nodes) out.push_back({n.role, n.buffer_capacity_bytes});
    return out;
  }

  const ContactEntry* find_contact(NodeId a, NodeId b) const {
    const auto& list = contacts_.at(a);
    auto it = std::lower_bound(list.begin(), list.end(), b,
                               [](const ContactEntry& e, NodeId id) { return e.peer < id; });
    return it != list.end() && it->peer == b ? &*it : nullptr;
  }
  ContactEntry& contact_entry(NodeId a, NodeId b) { return const_cast<ContactEntry&>(*find_contact(a, b)); }
  void insert_contact(NodeId a, NodeId b) {
    auto& list = contacts_[a];
    auto it = std::lower_bound(list.begin(), list.end(), b,
                               [](const ContactEntry& e, NodeId id) { return e.peer < id; });
    ContactEntry e;
    e.peer = b;
    list.insert(it, std::move(e));
  }
  void erase_contact(NodeId a, NodeId b) {
    auto& list = contacts_[a];
    list.erase(std::remove_if(list.begin(), list.end(), [b](const ContactEntry& e) { return e.peer == b; }),
               list.end());
  }

  void start_jobs(double now) {
    for (NodeId s = 0; s < contacts_.size(); ++s) {
      if (busy_[s] || contacts_[s].empty()) continue;
      for (auto& entry : contacts_[s]) {
        const NodeId r = entry.peer;
        if (busy_[r]) continue;
        const auto sv = router_.version(s), rv = router_.version(r);
        if (entry.self_version == sv && entry.peer_version == rv) continue;  // known to have nothing
        const auto m = router_.next_intent(s, r, &entry.peer_summary);
        if (!m) {
          entry.self_version = sv;
          entry.peer_version = rv;
          continue;
        }
        const StoredCopy* copy = router_.buffer(s).find(*m);
        TransferJob job;
        job.message = *m;
        job.sender = s;
        job.receiver = r;
        job.bytes_remaining = static_cast<double>(router_.message(*m).size_bytes);
        job.link_bandwidth = link_bandwidth(profiles_[s].bandwidth_bytes_per_s, profiles_[r].bandwidth_bytes_per_s);
        job.started_at_s = now;
        job.cursor_s = now;
        job.hop_count = copy->hop_count;
        job.copies = copy->copies;
        jobs_.push_back(job);
        busy_[s] = busy_[r] = true;
        log({now, EventKind::Send, *m, s, r, copy->hop_count});
        break;
      }
    }
  }

  void complete(const TransferJob& job, double now) {
    busy_[job.sender] = busy_[job.receiver] = false;
    const MessageInfo& info = router_.message(job.message);
    const std::uint32_t hops = job.hop_count + 1;
    ++metrics_.relayed;
    if (info.destination == job.receiver) {
      const bool first = !router_.delivered_at(job.receiver, job.message);
      log({now, first ? EventKind::Deliver : EventKind::Ack, job.message, job.sender, job.receiver, hops});
      if (first) {
        ++metrics_.delivered;
        metrics_.delivery_records.push_back({job.message, info.created_at_s, now});
      }
    } else {
      log({now, EventKind::Recv, job.message, job.sender, job.receiver, hops});
    }
    if (linked(job.sender, job.receiver)) {
      contact_entry(job.sender, job.receiver).peer_summary.insert(job.message);
      contact_entry(job.receiver, job.sender).peer_summary.insert(job.message);
    }
    StoredCopy snapshot{job.message, job.started_at_s, job.hop_count, job.copies};
    router_.receive(job.sender, job.receiver, job.message, snapshot, now);
    if (check_ && router_.config().protocol == Protocol::SprayAndWait) check_copies(job.message);
  }

  void check_copies(MessageIndex m) {
    if (router_.config().protocol != Protocol::SprayAndWait) return;
    ++stats_.copy_checks;
    const std::uint64_t total = router_.total_copies(m);
    const std::uint64_t budget = router_.config().snw_initial_copies;
    if (total > budget)
      throw InvariantViolation(message_name(m) + " has " + std::to_string(total) + " copies, budget " +
                               std::to_string(budget));
    if (!router_.config().eviction && !router_.config().ttl_s && total != budget && total != 0)
      throw InvariantViolation(message_name(m) + " copy budget not conserved: " + std::to_string(total));
  }

  void check_maxprop_pair(NodeId a, NodeId b) {
    for (NodeId n : {a, b}) {
      ++stats_.likelihood_checks;
      const double sum = router_.likelihoods(n).sum();
      if (std::abs(sum - 1.0) > 1e-9 && router_.node_count() > 1)
        throw InvariantViolation("likelihood vector of node " + std::to_string(n) + " sums to " +
                                 format_double(sum));
      ++stats_.ack_checks;
      for (const auto& c : router_.buffer(n).copies()) {
        if (router_.acks(n).contains(c.message))
          throw InvariantViolation("node " + std::to_string(n) + " still buffers acknowledged " +
                                   message_name(c.message));
      }
    }
    if (!(router_.acks(a) == router_.acks(b))) throw InvariantViolation("ack sets differ after merge");
  }

  void log(const RoutingEvent& e) {
    if (!record_trace_) return;
    trace_ += format_double(e.time_s);
    trace_ += ',';
    trace_ += to_string(e.kind);
    trace_ += ',';
    trace_ += message_name(e.message);
    trace_ += ',';
    trace_ += std::to_string(e.from);
    trace_ += ',';
    trace_ += std::to_string(e.to);
    trace_ += ',';
    trace_ += std::to_string(e.hop_count);
    trace_ += '\n';
  }

  Router router_;
  std::vector<NodeProfile> profiles_;
  std::vector<std::vector<ContactEntry>> contacts_;
  std::vector<bool> busy_;
  std::vector<TransferJob> jobs_;
  MetricsAccumulator metrics_;
  std::string trace_;
  bool record_trace_;
  bool check_;
  InvariantStats stats_;
};

inline constexpr const char* kRoutingTraceHeader = "time,event,message_id,from,to,hop_count\n";
inline constexpr const char* kContactTraceHeader = "time,event,node_a,node_b\n";
inline constexpr const char* kMovementTraceHeader = "time,node_id,x,y\n";

struct RunOptions {
  bool trace_routing = false;
  bool trace_contacts = false;
  std::optional<double> movement_sample_interval_s;
  bool check_invariants = false;
  // Full assertion sweep every this many steps when checking is on.
  std::uint64_t check_every_steps = 600;
};

struct ReportBundle {
  std::string protocol;
  std::uint64_t seed = 0;
  MetricsAccumulator metrics;
  std::uint64_t steps = 0;
  std::string routing_trace;
  std::string contact_trace;
  std::string movement_trace;
  InvariantStats invariants;

  std::string report_csv() const {
    return std::string(kReportCsvHeader) + report_csv_row(protocol, seed, metrics);
  }
  std::string report_txt() const {
    return report_table({{protocol, summarize(metrics)}}) + "created " + std::to_string(metrics.created) +
           ", delivered " + std::to_string(metrics.delivered) + ", relayed " + std::to_string(metrics.relayed) +
           ", aborted " + std::to_string(metrics.aborted) + "\n";
  }
};

inline std::uint64_t step_count(double duration_s, double dt_s) {
  if (!(duration_s > 0)) return 0;
  return static_cast<std::uint64_t>(std::ceil(duration_s / dt_s - 1e-9));
}

// Fixed-step loop. Per step: clock, movement, contact delta, aborts of lost
// links, contact-up exchanges, message generation, transfers (with their
// routing callbacks).
class Simulation {
 public:
  Simulation(const PreparedScenario& scenario, RunOptions options = {})
      : scenario_(scenario),
        config_(scenario.config),
        options_(options),
        network_(config_.router, node_profiles(config_), options.trace_routing, options.check_invariants),
        generator_rng_(config_.rng_seed, "generator") {
    const auto offsets = config_.group_offsets();
    for (std::size_t gi = 0; gi < config_.groups.size(); ++gi) {
      const auto& g = config_.groups[gi];
      std::shared_ptr<OverlayRouter> router;
      if (g.movement == MovementKind::ShortestPathMapBased) {
        if (!scenario.overlays.at(gi)) throw MapError("group " + g.name + " has no overlay");
        auto& slot = overlay_routers_[scenario.overlays[gi].get()];
        if (!slot) slot = std::make_shared<OverlayRouter>(*scenario.overlays[gi]);
        router = slot;
      }
      for (std::uint32_t k = 0; k < g.count; ++k) {
        const NodeId id = offsets[gi] + k;
        Node n;
        n.group = gi;
        n.profile = MovementProfile::from(g);
        n.router = router;
        n.rng = Rng(config_.rng_seed, "mobility-route", id);
        if (g.movement == MovementKind::Stationary) {
          n.state = init_stationary(g.points.at(k));
        } else {
          Rng init(config_.rng_seed, "mobility-init", id);
          n.state = init_position(router->graph(), init);
        }
        nodes_.push_back(std::move(n));
        ranges_.push_back(g.interface.range_m);
        if (g.role == Role::Source) sources_.push_back(id);
        if (g.role == Role::Destination) destinations_.push_back(id);
      }
    }
    positions_.resize(nodes_.size());
  }

  static std::vector<NodeProfile> node_profiles(const ScenarioConfig& c) {
    std::vector<NodeProfile> out;
    for (const auto& g : c.groups)
      for (std::uint32_t k = 0; k < g.count; ++k)
        out.push_back({g.role, g.buffer_capacity_bytes, g.interface.bandwidth_bytes_per_s});
    return out;
  }

  const Network& network() const { return network_; }
  Network& network() { return network_; }
  Point position(NodeId n) const { return nodes_.at(n).state.position; }
  const MobilityState& mobility(NodeId n) const { return nodes_.at(n).state; }
  double clock() const { return clock_; }
  std::uint64_t steps_done() const { return steps_done_; }

  ReportBundle run() {
    const std::uint64_t total = step_count(config_.duration_s, config_.time_step_s);
    while (steps_done_ < total) advance();
    return bundle();
  }

  void advance() {
    const double dt = config_.time_step_s;
    const std::uint64_t k = steps_done_;
    clock_ = static_cast<double>(k) * dt;
    if (k > 0) {
      const double prev = static_cast<double>(k - 1) * dt;
      for (auto& n : nodes_) {
        if (n.router) step(n.state, *n.router, n.profile, prev, clock_ - prev, n.rng);
      }
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) positions_[i] = nodes_[i].state.position;
    const ContactDelta delta = tracker_.update(positions_, ranges_, config_.range_rule);
    for (const auto& p : delta.downs) {
      network_.contact_down(p.a, p.b, clock_);
      log_contact("DOWN", p);
    }
    for (const auto& p : delta.ups) {
      network_.contact_up(p.a, p.b, clock_);
      log_contact("UP", p);
    }
    network_.expire(clock_);
    generate_due();
    network_.run_transfers(clock_, clock_ + dt);
    sample_movement();
    ++steps_done_;
    if (options_.check_invariants && steps_done_ % options_.check_every_steps == 0) network_.check_all();
  }

  ReportBundle bundle() const {
    ReportBundle b;
    b.protocol = std::string(to_string(config_.router.protocol));
    b.seed = config_.rng_seed;
    b.metrics = network_.metrics();
    b.steps = steps_done_;
    if (options_.trace_routing) b.routing_trace = kRoutingTraceHeader + network_.routing_trace();
    if (options_.trace_contacts) b.contact_trace = kContactTraceHeader + contact_trace_;
    if (options_.movement_sample_interval_s) b.movement_trace = kMovementTraceHeader + movement_trace_;
    b.invariants = network_.invariant_stats();
    return b;
  }

 private:
  struct Node {
    std::size_t group = 0;
    MobilityState state;
    MovementProfile profile;
    std::shared_ptr<OverlayRouter> router;
    Rng rng;
  };

  void generate_due() {
    const double interval = config_.message_interval_s;
    const auto fires = static_cast<std::uint64_t>(std::floor(config_.duration_s / interval + 1e-9));
    while (fired_ < fires) {
      const double fire_time = static_cast<double>(fired_) * interval;
      const auto fire_step = static_cast<std::uint64_t>(std::ceil(fire_time / config_.time_step_s - 1e-9));
      if (fire_step > steps_done_) break;
      if (sources_.empty() || destinations_.empty()) throw ScenarioError("empty source or destination pool");
      if (config_.messages_per_source) {
        for (NodeId src : sources_) generate_one(src);
      } else {
        const NodeId src = sources_[generator_rng_.below(sources_.size())];
        generate_one(src);
      }
      ++fired_;
    }
  }

  void generate_one(NodeId src) {
    const NodeId dst = destinations_[generator_rng_.below(destinations_.size())];
    const auto size = static_cast<std::uint64_t>(generator_rng_.uniform_int(
        static_cast<std::int64_t>(config_.message_size_min_bytes), static_cast<std::int64_t>(config_.message_size_max_bytes)));
    network_.create_message(src, dst, size, clock_);
  }

  void log_contact(const char* what, const NodePair& p) {
    if (!options_.trace_contacts) return;
    contact_trace_ += format_double(clock_) + "," + what + "," + std::to_string(p.a) + "," + std::to_string(p.b) + "\n";
  }

  void sample_movement() {
    if (!options_.movement_sample_interval_s) return;
    const double interval = *options_.movement_sample_interval_s;
    const auto sample_step = static_cast<std::uint64_t>(
        std::ceil(static_cast<double>(samples_) * interval / config_.time_step_s - 1e-9));
    if (sample_step != steps_done_) return;
    for (NodeId n = 0; n < nodes_.size(); ++n) {
      movement_trace_ += format_double(clock_) + "," + std::to_string(n) + "," +
                         format_double(nodes_[n].state.position.x) + "," +
                         format_double(nodes_[n].state.position.y) + "\n";
    }
    ++samples_;
  }

  const PreparedScenario& scenario_;
  const ScenarioConfig& config_;
  RunOptions options_;
  Network network_;
  std::vector<Node> nodes_;
  std::vector<Point> positions_;
  std::vector<double> ranges_;
  std::vector<NodeId> sources_;
  std::vector<NodeId> destinations_;
  std::map<const RoadGraph*, std::shared_ptr<OverlayRouter>> overlay_routers_;
  ContactTracker tracker_;
  Rng generator_rng_;
  std::uint64_t fired_ = 0;
  std::uint64_t samples_ = 0;
  std::uint64_t steps_done_ = 0;
  double clock_ = 0.0;
  std::string contact_trace_;
  std::string movement_trace_;
};

inline ReportBundle run(const PreparedScenario& scenario, RunOptions options = {}) {
  Simulation sim(scenario, options);
  return sim.run();
}

}  // namespace dtnsim
