// dtnsim command-line driver.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dtnsim/engine.hpp"
#include "dtnsim/harness.hpp"
#include "dtnsim/mapgen.hpp"
#include "dtnsim/trace.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dtnsim;

namespace {

struct GlobalOptions {
  std::string out_dir = "out";
  bool json = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> until;
  std::vector<std::string> sets;
  std::string repair;
};

void add_globals(CLI::App& app, GlobalOptions& g) {
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
  app.add_flag("--json", g.json, "also write JSON copies of every table");
  app.add_option("--seed", g.seed, "master RNG seed");
  app.add_option("--dt", g.dt, "time step in seconds");
  app.add_option("--until", g.until, "simulated duration in seconds");
  app.add_option("--set", g.sets, "override a scenario key (key=value), repeatable");
  app.add_option("--repair", g.repair, "map repair mode")->check(CLI::IsMember({"drop-minor", "bridge"}));
}

std::vector<std::pair<std::string, std::string>> overrides_of(const GlobalOptions& g) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : g.sets) out.push_back(parse_override(s));
  if (g.seed) out.emplace_back("Scenario.seed", std::to_string(*g.seed));
  if (g.dt) out.emplace_back("Scenario.updateInterval", format_double(*g.dt));
  if (g.until) out.emplace_back("Scenario.endTime", format_double(*g.until));
  if (!g.repair.empty()) out.emplace_back("Scenario.repair", g.repair);
  return out;
}

PreparedScenario load(const std::string& path, const GlobalOptions& g) {
  const ScenarioConfig config = parse_scenario(read_file(path), overrides_of(g));
  return prepare_scenario(config, fs::path(path).parent_path());
}

json metrics_json(const MetricsAccumulator& m) {
  const MetricSummary s = summarize(m);
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"created", m.created},
          {"delivered", m.delivered},
          {"relayed", m.relayed},
          {"aborted", m.aborted},
          {"delivery_rate", opt(s.delivery_rate)},
          {"overhead_ratio", opt(s.overhead_ratio)},
          {"latency_avg_s", opt(s.latency_avg_s)}};
}

json stat_json(const Stat& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"mean", opt(s.mean)}, {"min", opt(s.min)}, {"max", opt(s.max)}, {"samples", s.samples}};
}

void write_out(const fs::path& dir, const std::string& name, const std::string& content) {
  fs::create_directories(dir);
  write_file_atomic(dir / name, content);
}

// Empty string means the flag was not given; "-" is rejected.
std::optional<fs::path> trace_target(const std::string& value, const fs::path& out) {
  if (value.empty()) return std::nullopt;
  fs::path p(value);
  return p.is_absolute() ? p : out / p;
}

int cmd_run(const std::string& scenario, const GlobalOptions& g, const std::string& trace_movement,
            double movement_interval, const std::string& trace_contacts, const std::string& trace_routing,
            const std::string& dump_graph, bool check) {
  const PreparedScenario prepared = load(scenario, g);
  const fs::path out(g.out_dir);
  if (!prepared.repair.empty()) std::cerr << "map repair: " << prepared.repair.summary() << "\n";
  if (!dump_graph.empty()) {
    if (!prepared.base) throw MapError("--dump-graph needs a map-based scenario");
    write_out(trace_target(dump_graph, out)->parent_path(), trace_target(dump_graph, out)->filename().string(),
              graph_to_wkt(*prepared.base));
  }
  RunOptions opts;
  opts.trace_routing = !trace_routing.empty();
  opts.trace_contacts = !trace_contacts.empty();
  if (!trace_movement.empty()) opts.movement_sample_interval_s = movement_interval;
  opts.check_invariants = check;
  const ReportBundle b = run(prepared, opts);

  write_out(out, "report.csv", b.report_csv());
  write_out(out, "report.txt", b.report_txt());
  auto dump = [&](const std::string& flag, const std::string& content) {
    if (flag.empty()) return;
    const fs::path p = *trace_target(flag, out);
    write_out(p.parent_path(), p.filename().string(), content);
  };
  dump(trace_routing, b.routing_trace);
  dump(trace_contacts, b.contact_trace);
  dump(trace_movement, b.movement_trace);
  if (g.json) {
    json j = {{"protocol", b.protocol}, {"seed", b.seed}, {"steps", b.steps}, {"metrics", metrics_json(b.metrics)}};
    write_out(out, "report.json", j.dump(2) + "\n");
  }
  std::cout << b.report_txt();
  return 0;
}

int cmd_experiment(ExperimentAxis axis, const std::string& scenario, const GlobalOptions& g,
                   const std::vector<std::uint64_t>& seeds, unsigned workers, const std::vector<double>& scales,
                   const std::vector<std::uint32_t>& copies, const std::vector<std::string>& protocols) {
  const PreparedScenario prepared = load(scenario, g);
  ExperimentPlan plan;
  plan.axis = axis;
  plan.seeds = seeds;
  plan.workers = workers;
  plan.scales = scales;
  plan.copies = copies;
  if (!protocols.empty()) {
    plan.protocols.clear();
    for (const auto& name : protocols) {
      const auto p = parse_protocol(name);
      if (!p) throw ScenarioError("unknown protocol '" + name + "'");
      plan.protocols.push_back(*p);
    }
  }
  plan.scenario_path = scenario;
  for (const auto& s : g.sets) plan.base_overrides.push_back(parse_override(s));
  if (g.dt) plan.base_overrides.emplace_back("Scenario.updateInterval", format_double(*g.dt));
  if (g.until) plan.base_overrides.emplace_back("Scenario.endTime", format_double(*g.until));
  if (!g.repair.empty()) plan.base_overrides.emplace_back("Scenario.repair", g.repair);

  std::size_t done = 0;
  const std::size_t total = expand_plan(plan).size();
  const auto results = run_plan(prepared, plan, [&](const CellResult& r) {
    ++done;
    std::cerr << "[" << done << "/" << total << "] " << to_string(r.spec.protocol) << " seed " << r.spec.seed
              << (r.error.empty() ? "" : " FAILED: " + r.error) << "\n";
  });
  const auto rows = summarize_plan(results);
  const fs::path out(g.out_dir);
  write_out(out, "cells.csv", cells_csv(results));
  write_out(out, "summary.csv", summary_csv(rows));
  const std::string table = summary_table(rows, axis);
  write_out(out, "summary.txt", table);
  if (g.json) {
    json cells = json::array();
    for (const auto& r : results) {
      json c = {{"protocol", to_string(r.spec.protocol)}, {"carrier_scale", r.spec.scale}, {"seed", r.spec.seed}};
      if (r.spec.copies) c["copies"] = *r.spec.copies;
      c["metrics"] = r.metrics ? metrics_json(*r.metrics) : json(nullptr);
      c["error"] = r.error;
      c["command"] = r.command;
      cells.push_back(c);
    }
    json summary = json::array();
    for (const auto& r : rows) {
      json s = {{"label", row_label(r, axis)}, {"protocol", to_string(r.protocol)}, {"carrier_scale", r.scale}};
      if (r.copies) s["copies"] = *r.copies;
      s["runs"] = r.runs;
      s["failures"] = r.failures;
      s["delivery_rate"] = stat_json(r.delivery_rate);
      s["overhead_ratio"] = stat_json(r.overhead_ratio);
      s["latency_avg_s"] = stat_json(r.latency_avg_s);
      summary.push_back(s);
    }
    write_out(out, "cells.json", cells.dump(2) + "\n");
    write_out(out, "summary.json", summary.dump(2) + "\n");
  }
  std::cout << table;
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.metrics ? 0 : 1;
  if (failed) std::cerr << failed << " of " << results.size() << " cells failed\n";
  return failed == results.size() && !results.empty() ? 1 : 0;
}

int cmd_gen_map(const GlobalOptions& g, MapGenParams params) {
  if (g.seed) params.seed = *g.seed;
  const GeneratedMap map = generate_map(params);
  const fs::path out(g.out_dir);
  write_out(out, "base_roads.wkt", map.base_wkt());
  write_out(out, "truck_paths.wkt", map.truck_wkt());
  write_out(out, "pedestrian_paths.wkt", map.pedestrian_wkt());
  write_out(out, "vehicle_paths.wkt", map.vehicle_wkt());
  write_out(out, "freighter_paths.wkt", map.freighter_wkt());
  write_out(out, "base_stations.wkt", map.stations_wkt());
  // Load-check: the base must come out connected and every overlay must snap.
  const RoadGraph base = build_graph(parse_wkt(map.base_wkt()), 1.0);
  const auto comps = connected_components(base);
  std::cout << "base map: " << base.vertex_count() << " vertices, " << base.edges().size() << " edges, "
            << comps.sizes.size() << " component(s)\n";
  for (const auto& [name, text] : {std::pair{"truck", map.truck_wkt()}, std::pair{"pedestrian", map.pedestrian_wkt()},
                                   std::pair{"vehicle", map.vehicle_wkt()}, std::pair{"freighter", map.freighter_wkt()}}) {
    const RoadGraph o = build_overlay(base, parse_wkt(text), 1.0, name);
    std::cout << name << " overlay: " << o.vertex_count() << " vertices\n";
  }
  std::cout << "stations: ";
  for (const auto& p : map.stations) std::cout << wkt_coordinate(p) << "; ";
  std::cout << "\n";
  return 0;
}

int cmd_replay(const std::string& trace_path, const std::string& report_path, const GlobalOptions& g) {
  const MetricsAccumulator m = replay_routing_trace(read_file(trace_path));
  const MetricSummary s = summarize(m);
  std::cout << report_table({{"replay", s}}) << "created " << m.created << ", delivered " << m.delivered
            << ", relayed " << m.relayed << ", aborted " << m.aborted << "\n";
  if (g.json) write_out(fs::path(g.out_dir), "replay.json", metrics_json(m).dump(2) + "\n");
  if (report_path.empty()) return 0;
  // Compare against the last data row of a report.csv.
  const std::string report = read_file(report_path);
  std::string last;
  detail::for_each_line(report, [&](std::size_t, std::string_view l) { last = std::string(l); });
  const auto f = detail::split_csv_line(last);
  if (f.size() != 9) throw TraceError(0, "report has unexpected layout");
  const std::vector<std::pair<std::string, std::string>> checks = {
      {"created", std::to_string(m.created)},
      {"delivered", std::to_string(m.delivered)},
      {"relayed", std::to_string(m.relayed)},
      {"aborted", std::to_string(m.aborted)},
      {"delivery_rate", format_metric_raw(s.delivery_rate)},
      {"overhead_ratio", format_metric_raw(s.overhead_ratio)},
      {"latency_avg_s", format_metric_raw(s.latency_avg_s)}};
  int mismatches = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    if (f[i + 2] != checks[i].second) {
      std::cout << "MISMATCH " << checks[i].first << ": report " << f[i + 2] << ", replay " << checks[i].second << "\n";
      ++mismatches;
    }
  }
  std::cout << (mismatches ? "replay disagrees with report\n" : "replay matches report\n");
  return mismatches ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dtnsim: delay-tolerant network simulator"};
  app.require_subcommand(1);
  GlobalOptions g;

  auto* run_cmd = app.add_subcommand("run", "run one scenario");
  std::string scenario;
  std::string trace_movement, trace_contacts, trace_routing, dump_graph;
  double movement_interval = 60.0;
  bool check = false;
  run_cmd->add_option("scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
  add_globals(*run_cmd, g);
  run_cmd->add_option("--trace-movement", trace_movement, "write time,node_id,x,y samples to FILE");
  run_cmd->add_option("--movement-interval", movement_interval, "movement sampling interval (s)")->capture_default_str();
  run_cmd->add_option("--trace-contacts", trace_contacts, "write contact UP/DOWN events to FILE");
  run_cmd->add_option("--trace-routing", trace_routing, "write routing events to FILE");
  run_cmd->add_option("--dump-graph", dump_graph, "write the repaired base graph as WKT to FILE");
  run_cmd->add_flag("--check", check, "enable runtime invariant assertions");

  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<double> scales = {0.5, 1.0, 1.5};
  std::vector<std::uint32_t> copies = {5, 10, 20, 40, 80};
  std::vector<std::string> protocols;
  auto add_plan = [&](CLI::App* c) {
    c->add_option("scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
    add_globals(*c, g);
    c->add_option("--seeds", seeds, "seed list")->delimiter(',')->capture_default_str();
    c->add_option("--workers", workers, "parallel runs")->capture_default_str();
    if (c->get_name() != "sweep-l")
      c->add_option("--protocols", protocols, "protocol subset")->delimiter(',');
  };
  auto* cmp = app.add_subcommand("compare-protocols", "Epidemic vs Spray-and-Wait vs MaxProp");
  add_plan(cmp);
  auto* nodes = app.add_subcommand("sweep-nodes", "carrier-count sweep");
  add_plan(nodes);
  nodes->add_option("--scales", scales, "carrier scale factors")->delimiter(',')->capture_default_str();
  auto* sweep_l = app.add_subcommand("sweep-l", "Spray-and-Wait copy budget sweep");
  add_plan(sweep_l);
  sweep_l->add_option("--copies", copies, "L values")->delimiter(',')->capture_default_str();

  auto* gen = app.add_subcommand("gen-map", "write the synthetic town map and overlays");
  MapGenParams map_params;
  add_globals(*gen, g);
  gen->add_option("--width", map_params.width_m, "world width (m)")->capture_default_str();
  gen->add_option("--height", map_params.height_m, "world height (m)")->capture_default_str();
  gen->add_option("--segment", map_params.segment_m, "road segment length (m)")->capture_default_str();
  gen->add_option("--jitter", map_params.jitter_m, "road wobble (m)")->capture_default_str();
  gen->add_option("--grid-spacing", map_params.grid_spacing_m, "town block size (m)")->capture_default_str();

  auto* replay = app.add_subcommand("replay-trace", "recompute metrics from a routing trace");
  std::string trace_path, report_path;
  replay->add_option("trace", trace_path, "routing trace CSV")->required()->check(CLI::ExistingFile);
  replay->add_option("--report", report_path, "report.csv to compare against")->check(CLI::ExistingFile);
  add_globals(*replay, g);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(scenario, g, trace_movement, movement_interval, trace_contacts, trace_routing, dump_graph, check);
    if (*cmp) return cmd_experiment(ExperimentAxis::Protocol, scenario, g, seeds, workers, scales, copies, protocols);
    if (*nodes) return cmd_experiment(ExperimentAxis::CarrierScale, scenario, g, seeds, workers, scales, copies, protocols);
    if (*sweep_l) return cmd_experiment(ExperimentAxis::Copies, scenario, g, seeds, workers, scales, copies, protocols);
    if (*gen) return cmd_gen_map(g, map_params);
    if (*replay) return cmd_replay(trace_path, report_path, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
