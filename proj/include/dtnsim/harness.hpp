#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "dtnsim/engine.hpp"
#include "dtnsim/metrics.hpp"
#include "dtnsim/scenario.hpp"

namespace dtnsim {

enum class ExperimentAxis { Protocol, CarrierScale, Copies };

inline std::string_view to_string(ExperimentAxis a) {
  switch (a) {
    case ExperimentAxis::Protocol: return "protocol";
    case ExperimentAxis::CarrierScale: return "carrier_scale";
    case ExperimentAxis::Copies: return "copies";
  }
  return "?";
}

struct ExperimentPlan {
  ExperimentAxis axis = ExperimentAxis::Protocol;
  std::vector<Protocol> protocols = {Protocol::Epidemic, Protocol::SprayAndWait, Protocol::MaxProp};
  std::vector<double> scales = {0.5, 1.0, 1.5};
  std::vector<std::uint32_t> copies = {5, 10, 20, 40, 80};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  unsigned workers = 1;
  // Shown in the reproduction command of every cell.
  std::string scenario_path = "scenario.cfg";
  std::vector<std::pair<std::string, std::string>> base_overrides;
};

struct CellSpec {
  Protocol protocol = Protocol::Epidemic;
  double scale = 1.0;
  std::optional<std::uint32_t> copies;
  std::uint64_t seed = 1;
};

struct CellResult {
  CellSpec spec;
  std::optional<MetricsAccumulator> metrics;
  std::string error;
  std::string command;
};

// Carrier groups are multiplied by `factor` and rounded half away from zero.
inline ScenarioConfig scale_carriers(ScenarioConfig c, double factor) {
  for (auto& g : c.groups) {
    if (g.role != Role::Carrier) continue;
    g.count = static_cast<std::uint32_t>(std::max<long>(0, std::lround(g.count * factor)));
  }
  return c;
}

inline std::vector<CellSpec> expand_plan(const ExperimentPlan& plan) {
  std::vector<CellSpec> cells;
  switch (plan.axis) {
    case ExperimentAxis::Protocol:
      for (auto p : plan.protocols)
        for (auto s : plan.seeds) cells.push_back({p, 1.0, std::nullopt, s});
      break;
    case ExperimentAxis::CarrierScale:
      for (double f : plan.scales)
        for (auto p : plan.protocols)
          for (auto s : plan.seeds) cells.push_back({p, f, std::nullopt, s});
      break;
    case ExperimentAxis::Copies:
      for (auto l : plan.copies)
        for (auto s : plan.seeds) cells.push_back({Protocol::SprayAndWait, 1.0, l, s});
      break;
  }
  return cells;
}

inline ScenarioConfig cell_config(const ScenarioConfig& base, const CellSpec& cell) {
  ScenarioConfig c = cell.scale != 1.0 ? scale_carriers(base, cell.scale) : base;
  c.router.protocol = cell.protocol;
  c.rng_seed = cell.seed;
  if (cell.copies) c.router.snw_initial_copies = *cell.copies;
  return c;
}

inline std::string reproduce_command(const ExperimentPlan& plan, const ScenarioConfig& base, const CellSpec& cell) {
  std::string cmd = "dtnsim run " + plan.scenario_path + " --seed " + std::to_string(cell.seed);
  for (const auto& [k, v] : plan.base_overrides) cmd += " --set " + k + "=" + v;
  cmd += " --set Router.protocol=" + std::string(to_string(cell.protocol));
  if (cell.copies) cmd += " --set Router.copies=" + std::to_string(*cell.copies);
  if (cell.scale != 1.0) {
    const ScenarioConfig scaled = scale_carriers(base, cell.scale);
    for (std::size_t i = 0; i < base.groups.size(); ++i)
      if (base.groups[i].role == Role::Carrier)
        cmd += " --set Group" + std::to_string(i + 1) + ".count=" + std::to_string(scaled.groups[i].count);
  }
  return cmd;
}

// Runs every cell; `progress` (optional) is called after each finished cell.
// Cells are independent; results come back in plan order whatever the
// worker count.
inline std::vector<CellResult> run_plan(const PreparedScenario& prepared, const ExperimentPlan& plan,
                                        const std::function<void(const CellResult&)>& progress = {}) {
  const std::vector<CellSpec> cells = expand_plan(plan);
  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      CellResult& r = results[i];
      r.spec = cells[i];
      r.command = reproduce_command(plan, prepared.config, cells[i]);
      try {
        PreparedScenario p = prepared;
        p.config = cell_config(prepared.config, cells[i]);
        validate(p.config);
        r.metrics = run(p).metrics;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(r);
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(plan.workers, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  return results;
}

struct Stat {
  std::optional<double> mean;
  std::optional<double> min;
  std::optional<double> max;
  std::size_t samples = 0;
};

inline Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  s.samples = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  return s;
}

struct SummaryRow {
  Protocol protocol = Protocol::Epidemic;
  double scale = 1.0;
  std::optional<std::uint32_t> copies;
  std::size_t runs = 0;
  std::size_t failures = 0;
  Stat delivery_rate;
  Stat overhead_ratio;
  Stat latency_avg_s;
};

// Seed-averaged rows, one per (axis value, protocol), in plan order.
inline std::vector<SummaryRow> summarize_plan(const std::vector<CellResult>& results) {
  std::vector<SummaryRow> rows;
  std::map<std::tuple<double, int, std::uint32_t>, std::size_t> index;
  std::vector<std::vector<double>> dr, oh, lat;
  for (const auto& r : results) {
    const auto key = std::make_tuple(r.spec.scale, static_cast<int>(r.spec.protocol), r.spec.copies.value_or(0));
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, rows.size()).first;
      rows.push_back({r.spec.protocol, r.spec.scale, r.spec.copies, 0, 0, {}, {}, {}});
      dr.emplace_back();
      oh.emplace_back();
      lat.emplace_back();
    }
    const std::size_t i = it->second;
    ++rows[i].runs;
    if (!r.metrics) {
      ++rows[i].failures;
      continue;
    }
    const MetricSummary s = summarize(*r.metrics);
    if (s.delivery_rate) dr[i].push_back(*s.delivery_rate);
    if (s.overhead_ratio) oh[i].push_back(*s.overhead_ratio);
    if (s.latency_avg_s) lat[i].push_back(*s.latency_avg_s);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].delivery_rate = stat_of(dr[i]);
    rows[i].overhead_ratio = stat_of(oh[i]);
    rows[i].latency_avg_s = stat_of(lat[i]);
  }
  return rows;
}

inline std::string row_label(const SummaryRow& row, ExperimentAxis axis) {
  switch (axis) {
    case ExperimentAxis::Protocol: return std::string(to_string(row.protocol));
    case ExperimentAxis::CarrierScale:
      return std::string(to_string(row.protocol)) + "@" + format_double(row.scale);
    case ExperimentAxis::Copies: return "L=" + std::to_string(row.copies.value_or(0));
  }
  return "?";
}

inline std::string cells_csv(const std::vector<CellResult>& results) {
  std::string out = "protocol,carrier_scale,copies,seed,created,delivered,relayed,aborted,delivery_rate,"
                    "overhead_ratio,latency_avg_s,error,command\n";
  for (const auto& r : results) {
    out += std::string(to_string(r.spec.protocol)) + "," + format_double(r.spec.scale) + "," +
           (r.spec.copies ? std::to_string(*r.spec.copies) : std::string()) + "," + std::to_string(r.spec.seed) + ",";
    if (r.metrics) {
      const auto& m = *r.metrics;
      const MetricSummary s = summarize(m);
      out += std::to_string(m.created) + "," + std::to_string(m.delivered) + "," + std::to_string(m.relayed) + "," +
             std::to_string(m.aborted) + "," + format_metric_raw(s.delivery_rate) + "," +
             format_metric_raw(s.overhead_ratio) + "," + format_metric_raw(s.latency_avg_s) + ",,";
    } else {
      std::string err = r.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      out += ",,,,,,," + err + ",";
    }
    out += "\"" + r.command + "\"\n";
  }
  return out;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "protocol,carrier_scale,copies,runs,failures,delivery_rate_mean,delivery_rate_min,"
                    "delivery_rate_max,overhead_ratio_mean,overhead_ratio_min,overhead_ratio_max,"
                    "latency_avg_s_mean,latency_avg_s_min,latency_avg_s_max\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.protocol)) + "," + format_double(r.scale) + "," +
           (r.copies ? std::to_string(*r.copies) : std::string()) + "," + std::to_string(r.runs) + "," +
           std::to_string(r.failures);
    for (const Stat* s : {&r.delivery_rate, &r.overhead_ratio, &r.latency_avg_s})
      out += "," + format_metric_raw(s->mean) + "," + format_metric_raw(s->min) + "," + format_metric_raw(s->max);
    out += "\n";
  }
  return out;
}

inline std::string summary_table(const std::vector<SummaryRow>& rows, ExperimentAxis axis) {
  std::vector<ReportColumn> cols;
  for (const auto& r : rows)
    cols.push_back({row_label(r, axis), {r.delivery_rate.mean, r.overhead_ratio.mean, r.latency_avg_s.mean}});
  return report_table(cols);
}

}  // namespace dtnsim
