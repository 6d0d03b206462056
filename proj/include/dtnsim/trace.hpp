#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dtnsim/engine.hpp"
#include "dtnsim/metrics.hpp"

namespace dtnsim {

class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, const std::string& what)
      : std::runtime_error("trace line " + std::to_string(line) + ": " + what) {}
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0, line = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view l = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line;
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (l.empty()) continue;
    fn(line, l);
  }
}

inline double trace_number(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw TraceError(line, "bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

// Recomputes the run counters from a routing trace alone: CREATE events give
// Created and t_is, DELIVER gives first deliveries and t_id, every completed
// transfer (RECV, DELIVER, ACK) counts as relayed, ABORT as aborted.
inline MetricsAccumulator replay_routing_trace(std::string_view text) {
  MetricsAccumulator acc;
  std::map<std::string, double, std::less<>> created_at;
  std::map<std::string, bool, std::less<>> delivered;
  detail::for_each_line(text, [&](std::size_t line, std::string_view l) {
    const auto f = detail::split_csv_line(l);
    if (f.size() != 6) throw TraceError(line, "expected 6 fields");
    if (f[0] == "time") return;  // header
    const double t = detail::trace_number(f[0], line);
    const std::string_view ev = f[1];
    const std::string_view id = f[2];
    if (ev == "CREATE") {
      ++acc.created;
      created_at.emplace(std::string(id), t);
    } else if (ev == "DELIVER") {
      ++acc.relayed;
      auto it = created_at.find(id);
      if (it == created_at.end()) throw TraceError(line, "delivery of unknown message " + std::string(id));
      auto& done = delivered[std::string(id)];
      if (!done) {
        done = true;
        ++acc.delivered;
        const auto index = static_cast<MessageIndex>(std::stoul(std::string(id.substr(1))) - 1);
        acc.delivery_records.push_back({index, it->second, t});
      }
    } else if (ev == "RECV" || ev == "ACK") {
      ++acc.relayed;
    } else if (ev == "ABORT") {
      ++acc.aborted;
    } else if (ev != "SEND" && ev != "DROP") {
      throw TraceError(line, "unknown event '" + std::string(ev) + "'");
    }
  });
  return acc;
}

struct ContactEvent {
  double time_s = 0.0;
  bool up = true;
  NodeId a = 0;
  NodeId b = 0;
};

inline std::vector<ContactEvent> parse_contact_trace(std::string_view text) {
  std::vector<ContactEvent> out;
  detail::for_each_line(text, [&](std::size_t line, std::string_view l) {
    const auto f = detail::split_csv_line(l);
    if (f.size() != 4) throw TraceError(line, "expected time,event,node_a,node_b");
    if (f[0] == "time") return;
    ContactEvent e;
    e.time_s = detail::trace_number(f[0], line);
    if (f[1] == "UP") e.up = true;
    else if (f[1] == "DOWN") e.up = false;
    else throw TraceError(line, "event must be UP or DOWN");
    e.a = static_cast<NodeId>(detail::trace_number(f[2], line));
    e.b = static_cast<NodeId>(detail::trace_number(f[3], line));
    out.push_back(e);
  });
  return out;
}

struct ScriptedMessage {
  double time_s = 0.0;
  NodeId source = 0;
  NodeId destination = 0;
  std::uint64_t size_bytes = 1;
};

// Contact-trace driven run without mobility: at every distinct event time,
// contact downs, then ups, then message creations, then the links run until
// the next event time.
inline void replay_contacts(Network& net, std::vector<ContactEvent> contacts, std::vector<ScriptedMessage> messages,
                            double end_s) {
  std::stable_sort(contacts.begin(), contacts.end(),
                   [](const ContactEvent& x, const ContactEvent& y) { return x.time_s < y.time_s; });
  std::stable_sort(messages.begin(), messages.end(),
                   [](const ScriptedMessage& x, const ScriptedMessage& y) { return x.time_s < y.time_s; });
  std::vector<double> times;
  for (const auto& c : contacts) times.push_back(c.time_s);
  for (const auto& m : messages) times.push_back(m.time_s);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::size_t ci = 0, mi = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    for (std::size_t j = ci; j < contacts.size() && contacts[j].time_s == t; ++j)
      if (!contacts[j].up) net.contact_down(contacts[j].a, contacts[j].b, t);
    for (; ci < contacts.size() && contacts[ci].time_s == t; ++ci)
      if (contacts[ci].up) net.contact_up(contacts[ci].a, contacts[ci].b, t);
    for (; mi < messages.size() && messages[mi].time_s == t; ++mi)
      net.create_message(messages[mi].source, messages[mi].destination, messages[mi].size_bytes, t);
    const double next = k + 1 < times.size() ? times[k + 1] : std::max(end_s, t);
    net.run_transfers(t, next);
  }
}

}  // namespace dtnsim
