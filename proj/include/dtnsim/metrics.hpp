#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dtnsim/routing.hpp"
#include "dtnsim/units.hpp"

namespace dtnsim {

struct DeliveryRecord {
  MessageIndex message = 0;
  double created_at_s = 0.0;    // t_is
  double delivered_at_s = 0.0;  // t_id, first delivery
};

struct MetricsAccumulator {
  std::uint64_t created = 0;
  std::uint64_t delivered = 0;  // first deliveries only
  std::uint64_t relayed = 0;    // completed transfers, delivery hops included
  std::uint64_t aborted = 0;
  std::vector<DeliveryRecord> delivery_records;

  friend bool operator==(const MetricsAccumulator&, const MetricsAccumulator&) = default;
};

inline bool operator==(const DeliveryRecord& a, const DeliveryRecord& b) {
  return a.message == b.message && a.created_at_s == b.created_at_s && a.delivered_at_s == b.delivered_at_s;
}

inline std::optional<double> delivery_rate(std::uint64_t delivered, std::uint64_t created) {
  if (created == 0) return std::nullopt;
  return static_cast<double>(delivered) / static_cast<double>(created);
}

inline std::optional<double> overhead_ratio(std::uint64_t relayed, std::uint64_t delivered) {
  if (delivered == 0) return std::nullopt;
  return (static_cast<double>(relayed) - static_cast<double>(delivered)) / static_cast<double>(delivered);
}

inline std::optional<double> latency_avg(const std::vector<DeliveryRecord>& records) {
  if (records.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& r : records) sum += r.delivered_at_s - r.created_at_s;
  return sum / static_cast<double>(records.size());
}

inline std::optional<double> delivery_rate(const MetricsAccumulator& acc) {
  return delivery_rate(acc.delivered, acc.created);
}
inline std::optional<double> overhead_ratio(const MetricsAccumulator& acc) {
  return overhead_ratio(acc.relayed, acc.delivered);
}
inline std::optional<double> latency_avg(const MetricsAccumulator& acc) { return latency_avg(acc.delivery_records); }

inline std::string format_metric(const std::optional<double>& v) { return v ? format_fixed4(*v) : "n/a"; }
inline std::string format_metric_raw(const std::optional<double>& v) { return v ? format_double(*v) : "n/a"; }

struct MetricSummary {
  std::optional<double> delivery_rate;
  std::optional<double> overhead_ratio;
  std::optional<double> latency_avg_s;
};

inline MetricSummary summarize(const MetricsAccumulator& acc) {
  return {delivery_rate(acc), overhead_ratio(acc), latency_avg(acc)};
}

inline const char* kReportCsvHeader =
    "protocol,seed,created,delivered,relayed,aborted,delivery_rate,overhead_ratio,latency_avg_s\n";

inline std::string report_csv_row(std::string_view protocol, std::uint64_t seed, const MetricsAccumulator& acc) {
  const MetricSummary s = summarize(acc);
  return std::string(protocol) + "," + std::to_string(seed) + "," + std::to_string(acc.created) + "," +
         std::to_string(acc.delivered) + "," + std::to_string(acc.relayed) + "," + std::to_string(acc.aborted) +
         "," + format_metric_raw(s.delivery_rate) + "," + format_metric_raw(s.overhead_ratio) + "," +
         format_metric_raw(s.latency_avg_s) + "\n";
}

// Aligned table: one column per run, rows as in the usual protocol
// comparison layout.
struct ReportColumn {
  std::string title;
  MetricSummary metrics;
};

inline std::string report_table(const std::vector<ReportColumn>& columns) {
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  std::size_t width = 10;
  for (const auto& c : columns) width = std::max(width, c.title.size() + 2);
  std::string out = pad("", 14);
  for (const auto& c : columns) out += pad(c.title, width);
  out += "\n";
  auto row = [&](const char* label, auto get) {
    std::string line = label;
    line.resize(14, ' ');
    for (const auto& c : columns) line += pad(format_metric(get(c.metrics)), width);
    out += line + "\n";
  };
  row("Delivery rate", [](const MetricSummary& m) { return m.delivery_rate; });
  row("Overhead rate", [](const MetricSummary& m) { return m.overhead_ratio; });
  row("Average delay", [](const MetricSummary& m) { return m.latency_avg_s; });
  return out;
}

}  // namespace dtnsim
