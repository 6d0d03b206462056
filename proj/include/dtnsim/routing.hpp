#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dtnsim/radio.hpp"
#include "dtnsim/scenario.hpp"

namespace dtnsim {

using MessageIndex = std::uint32_t;

struct MessageInfo {
  MessageIndex index = 0;  // printed as "M<index+1>"
  NodeId source = 0;
  NodeId destination = 0;
  std::uint64_t size_bytes = 0;
  double created_at_s = 0.0;
};

inline std::string message_name(MessageIndex index) { return "M" + std::to_string(index + 1); }

// A node's copy of a message.
struct StoredCopy {
  MessageIndex message = 0;
  double received_at_s = 0.0;
  std::uint32_t hop_count = 0;
  std::uint32_t copies = 1;  // Spray-and-Wait budget carried by this copy
};

class MessageSet {
 public:
  bool contains(MessageIndex m) const {
    const std::size_t w = m / 64;
    return w < words_.size() && ((words_[w] >> (m % 64)) & 1u);
  }
  void insert(MessageIndex m) {
    const std::size_t w = m / 64;
    if (w >= words_.size()) words_.resize(w + 1, 0);
    words_[w] |= std::uint64_t{1} << (m % 64);
  }
  void erase(MessageIndex m) {
    const std::size_t w = m / 64;
    if (w < words_.size()) words_[w] &= ~(std::uint64_t{1} << (m % 64));
  }
  // Returns true when anything was added.
  bool merge(const MessageSet& other) {
    if (other.words_.size() > words_.size()) words_.resize(other.words_.size(), 0);
    bool changed = false;
    for (std::size_t i = 0; i < other.words_.size(); ++i) {
      const std::uint64_t next = words_[i] | other.words_[i];
      changed |= next != words_[i];
      words_[i] = next;
    }
    return changed;
  }
  std::size_t size() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(__builtin_popcountll(w));
    return n;
  }
  friend bool operator==(const MessageSet& a, const MessageSet& b) {
    const std::size_t n = std::max(a.words_.size(), b.words_.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = i < a.words_.size() ? a.words_[i] : 0;
      const auto y = i < b.words_.size() ? b.words_[i] : 0;
      if (x != y) return false;
    }
    return true;
  }

 private:
  std::vector<std::uint64_t> words_;
};

// Copies in receive order (oldest first). Byte accounting is kept by the
// caller-supplied sizes so the buffer never needs the message registry.
class Buffer {
 public:
  explicit Buffer(std::uint64_t capacity_bytes = 0) : capacity_(capacity_bytes) {}

  std::uint64_t capacity() const { return capacity_; }
  std::uint64_t used() const { return used_; }
  std::uint64_t free_bytes() const { return capacity_ - used_; }
  bool contains(MessageIndex m) const { return held_.contains(m); }
  const std::vector<StoredCopy>& copies() const { return copies_; }
  const MessageSet& held() const { return held_; }
  std::size_t count() const { return copies_.size(); }

  StoredCopy* find(MessageIndex m) {
    if (!contains(m)) return nullptr;
    for (auto& c : copies_)
      if (c.message == m) return &c;
    return nullptr;
  }
  const StoredCopy* find(MessageIndex m) const { return const_cast<Buffer*>(this)->find(m); }

  void insert(const StoredCopy& copy, std::uint64_t size) {
    assert(!contains(copy.message));
    copies_.push_back(copy);
    held_.insert(copy.message);
    used_ += size;
  }

  bool erase(MessageIndex m, std::uint64_t size) {
    if (!contains(m)) return false;
    auto it = std::find_if(copies_.begin(), copies_.end(), [m](const StoredCopy& c) { return c.message == m; });
    copies_.erase(it);
    held_.erase(m);
    used_ -= size;
    return true;
  }

 private:
  std::uint64_t capacity_ = 0;
  std::uint64_t used_ = 0;
  std::vector<StoredCopy> copies_;
  MessageSet held_;
};

struct CopySplit {
  std::uint32_t kept = 0;
  std::uint32_t given = 0;
};

// Spray phase hand-over. Binary keeps ceil(c/2) and gives floor(c/2);
// vanilla gives exactly one copy.
inline CopySplit split_copies(std::uint32_t copies_remaining, SprayMode mode) {
  if (copies_remaining <= 1) throw std::logic_error("split_copies requires more than one copy");
  if (mode == SprayMode::Binary) return {copies_remaining - copies_remaining / 2, copies_remaining / 2};
  return {copies_remaining - 1, 1};
}

// MaxProp delivery likelihoods of one node towards every other node.
class LikelihoodTable {
 public:
  LikelihoodTable() = default;
  LikelihoodTable(NodeId owner, std::size_t node_count) : owner_(owner), f_(node_count, 0.0) {
    if (node_count > 1) {
      const double init = 1.0 / static_cast<double>(node_count - 1);
      for (std::size_t j = 0; j < node_count; ++j)
        if (j != owner) f_[j] = init;
    }
  }

  // Incremental averaging: add one to the met peer, renormalise to sum 1.
  void update(NodeId met_peer) {
    if (met_peer == owner_) throw std::logic_error("a node cannot meet itself");
    f_.at(met_peer) += 1.0;
    double sum = 0.0;
    for (double v : f_) sum += v;
    for (double& v : f_) v /= sum;
  }

  double operator[](NodeId j) const { return f_[j]; }
  double sum() const {
    double s = 0.0;
    for (double v : f_) s += v;
    return s;
  }
  NodeId owner() const { return owner_; }
  std::size_t size() const { return f_.size(); }
  std::span<const double> values() const { return f_; }

 private:
  NodeId owner_ = 0;
  std::vector<double> f_;
};

inline constexpr double kUnreachableCost = std::numeric_limits<double>::infinity();

// Costs from `self` to every node through the likelihood graph: an edge u->v
// costs 1 - f_u(v) where f_u is u's vector as known to self. Equal costs
// (within 1e-12) prefer the path with fewer hops.
inline std::vector<double> compute_path_costs(NodeId self, std::size_t node_count,
                                              const std::function<std::span<const double>(NodeId)>& vector_of) {
  std::vector<double> cost(node_count, kUnreachableCost);
  std::vector<std::uint32_t> hops(node_count, std::numeric_limits<std::uint32_t>::max());
  std::vector<bool> done(node_count, false);
  cost[self] = 0.0;
  hops[self] = 0;
  auto better = [](double c1, std::uint32_t h1, double c2, std::uint32_t h2) {
    if (std::abs(c1 - c2) <= 1e-12) return h1 < h2;
    return c1 < c2;
  };
  for (std::size_t iter = 0; iter < node_count; ++iter) {
    std::optional<NodeId> u;
    for (NodeId v = 0; v < node_count; ++v) {
      if (done[v] || std::isinf(cost[v])) continue;
      if (!u || better(cost[v], hops[v], cost[*u], hops[*u])) u = v;
    }
    if (!u) break;
    done[*u] = true;
    const auto f = vector_of(*u);
    for (NodeId v = 0; v < node_count; ++v) {
      if (done[v] || v == *u) continue;
      const double w = 1.0 - f[v];
      const double c = cost[*u] + std::max(0.0, w);
      if (better(c, hops[*u] + 1, cost[v], hops[v])) {
        cost[v] = c;
        hops[v] = hops[*u] + 1;
      }
    }
  }
  return cost;
}

inline double compute_path_cost(NodeId self, NodeId destination, std::size_t node_count,
                                const std::function<std::span<const double>(NodeId)>& vector_of) {
  if (destination == self) throw std::logic_error("path cost to self is undefined");
  if (destination >= node_count) return kUnreachableCost;
  return compute_path_costs(self, node_count, vector_of)[destination];
}

enum class EventKind { Create, Send, Recv, Deliver, Ack, Abort, Drop };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Create: return "CREATE";
    case EventKind::Send: return "SEND";
    case EventKind::Recv: return "RECV";
    case EventKind::Deliver: return "DELIVER";
    case EventKind::Ack: return "ACK";
    case EventKind::Abort: return "ABORT";
    case EventKind::Drop: return "DROP";
  }
  return "?";
}

struct RoutingEvent {
  double time_s = 0.0;
  EventKind kind = EventKind::Drop;
  MessageIndex message = 0;
  NodeId from = 0;
  NodeId to = 0;
  std::uint32_t hop_count = 0;
};

using EventSink = std::function<void(const RoutingEvent&)>;

struct RouterNodeSetup {
  Role role = Role::Carrier;
  std::uint64_t buffer_capacity_bytes = 0;
};

enum class ReceiveOutcome { Relayed, Delivered, DuplicateDelivery, Rejected };

struct AcceptDecision {
  bool accepted = false;
  std::vector<MessageIndex> evicted;  // in eviction order
};

// Store-carry-forward state and decisions for every node of one run.
class Router {
 public:
  Router(RouterConfig config, std::vector<RouterNodeSetup> nodes, EventSink sink = {})
      : config_(config), sink_(std::move(sink)) {
    const std::size_t n = nodes.size();
    nodes_.reserve(n);
    for (NodeId i = 0; i < n; ++i) {
      NodeState s;
      s.role = nodes[i].role;
      s.buffer = Buffer(nodes[i].buffer_capacity_bytes);
      if (config_.protocol == Protocol::MaxProp) {
        s.known.assign(n, KnownVector{});
        s.known[i].values = LikelihoodTable(i, n);
        s.known[i].present = true;
      }
      nodes_.push_back(std::move(s));
    }
  }

  const RouterConfig& config() const { return config_; }
  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<MessageInfo>& messages() const { return messages_; }
  const MessageInfo& message(MessageIndex m) const { return messages_.at(m); }
  const Buffer& buffer(NodeId n) const { return nodes_.at(n).buffer; }
  Role role(NodeId n) const { return nodes_.at(n).role; }
  bool delivered_at(NodeId n, MessageIndex m) const { return nodes_.at(n).delivered.contains(m); }
  const MessageSet& acks(NodeId n) const { return nodes_.at(n).acked; }
  const LikelihoodTable& likelihoods(NodeId n) const { return nodes_.at(n).known.at(n).values; }
  // Bumped whenever anything that can change a node's offers or acceptances changes.
  std::uint64_t version(NodeId n) const { return nodes_.at(n).version; }

  void set_sink(EventSink sink) { sink_ = std::move(sink); }

  // Registers a new message and stores it at its source. Returns false when
  // it cannot be stored (the message still counts as created).
  std::pair<MessageIndex, bool> create_message(NodeId source, NodeId destination, std::uint64_t size,
                                               double now_s) {
    const auto m = static_cast<MessageIndex>(messages_.size());
    messages_.push_back({m, source, destination, size, now_s});
    emit({now_s, EventKind::Create, m, source, destination, 0});
    auto& node = nodes_.at(source);
    StoredCopy copy{m, now_s, 0, config_.protocol == Protocol::SprayAndWait ? config_.snw_initial_copies : 1};
    const AcceptDecision d = make_room(source, m, [&](const StoredCopy& c) {
      return messages_[c.message].source != source;
    }, /*oldest_first=*/true);
    if (!d.accepted) {
      emit({now_s, EventKind::Drop, m, source, source, 0});
      return {m, false};
    }
    apply_evictions(source, d.evicted, now_s);
    node.buffer.insert(copy, size);
    ++node.version;
    return {m, true};
  }

  // Contact establishment: MaxProp merges ack sets (purging acknowledged
  // copies), updates both likelihood tables and swaps vectors.
  void on_contact_up(NodeId a, NodeId b, double now_s) {
    if (config_.protocol != Protocol::MaxProp) return;
    auto& na = nodes_.at(a);
    auto& nb = nodes_.at(b);
    na.acked.merge(nb.acked);
    nb.acked.merge(na.acked);
    purge_acked(a, now_s);
    purge_acked(b, now_s);
    na.known[a].values.update(b);
    na.known[a].stamp = now_s;
    nb.known[b].values.update(a);
    nb.known[b].stamp = now_s;
    for (NodeId j = 0; j < nodes_.size(); ++j) {
      auto& ka = na.known[j];
      auto& kb = nb.known[j];
      if (j == a || j == b) continue;
      if (kb.present && (!ka.present || kb.stamp > ka.stamp)) ka = kb;
      else if (ka.present && (!kb.present || ka.stamp > kb.stamp)) kb = ka;
    }
    na.known[b] = nb.known[b];
    nb.known[a] = na.known[a];
    na.costs_valid = false;
    nb.costs_valid = false;
  }

  // Ordered send intents from self to peer. Recomputed on demand; the engine
  // starts the first one whenever both interfaces are idle. Ids in `skip`
  // (what self believes the peer already holds) are never offered.
  std::vector<MessageIndex> send_intents(NodeId self, NodeId peer, const MessageSet* skip = nullptr) {
    const auto& s = nodes_.at(self);
    if (s.role == Role::Destination) return {};
    std::vector<const StoredCopy*> offers;
    for (const auto& c : s.buffer.copies()) {
      if (skip && skip->contains(c.message)) continue;
      if (!peer_wants(self, peer, c)) continue;
      offers.push_back(&c);
    }
    auto older = [this](const StoredCopy* x, const StoredCopy* y) {
      const auto& mx = messages_[x->message];
      const auto& my = messages_[y->message];
      if (mx.created_at_s != my.created_at_s) return mx.created_at_s < my.created_at_s;
      return mx.index < my.index;
    };
    switch (config_.protocol) {
      case Protocol::Epidemic:
        std::sort(offers.begin(), offers.end(), older);
        break;
      case Protocol::SprayAndWait:
        std::sort(offers.begin(), offers.end(), [&](const StoredCopy* x, const StoredCopy* y) {
          const bool dx = messages_[x->message].destination == peer;
          const bool dy = messages_[y->message].destination == peer;
          if (dx != dy) return dx;
          return older(x, y);
        });
        break;
      case Protocol::MaxProp: {
        const auto& cost = path_costs(self);
        const std::uint32_t threshold = config_.maxprop_hop_threshold;
        auto tier = [&](const StoredCopy* c) {
          if (messages_[c->message].destination == peer) return 0;
          return c->hop_count < threshold ? 1 : 2;
        };
        std::sort(offers.begin(), offers.end(), [&](const StoredCopy* x, const StoredCopy* y) {
          const int tx = tier(x), ty = tier(y);
          if (tx != ty) return tx < ty;
          if (tx == 1 && x->hop_count != y->hop_count) return x->hop_count < y->hop_count;
          if (tx == 2) {
            const double cx = cost[messages_[x->message].destination];
            const double cy = cost[messages_[y->message].destination];
            if (cx != cy) return cx < cy;
          }
          return older(x, y);
        });
        break;
      }
    }
    std::vector<MessageIndex> out;
    out.reserve(offers.size());
    for (const auto* c : offers) out.push_back(c->message);
    return out;
  }

  // First intent only; avoids sorting when the engine just needs the head.
  std::optional<MessageIndex> next_intent(NodeId self, NodeId peer, const MessageSet* skip = nullptr) {
    auto all = send_intents(self, peer, skip);
    if (all.empty()) return std::nullopt;
    return all.front();
  }

  // Copy the sender would hand over right now (hop count and copy budget).
  std::optional<StoredCopy> outgoing_copy(NodeId sender, NodeId receiver, MessageIndex m) const {
    const StoredCopy* c = nodes_.at(sender).buffer.find(m);
    if (!c) return std::nullopt;
    StoredCopy out = *c;
    if (config_.protocol == Protocol::SprayAndWait && messages_[m].destination != receiver && c->copies > 1)
      out.copies = split_copies(c->copies, config_.snw_mode).given;
    return out;
  }

  // Buffer admission for an incoming relay copy; evicts only when the whole
  // shortfall can be covered. Copies the node originated are never evicted.
  AcceptDecision accept_message(NodeId node, MessageIndex m) {
    const auto& n = nodes_.at(node);
    if (n.buffer.contains(m)) return {};
    if (messages_.at(m).destination == node) return {true, {}};
    const bool maxprop = config_.protocol == Protocol::MaxProp;
    return make_room(node, m, [&](const StoredCopy& c) {
      return messages_[c.message].source != node;
    }, !maxprop);
  }

  // Completion of a transfer of `m` from sender to receiver. `snapshot` is
  // the sender's copy as it was when the transfer started.
  ReceiveOutcome receive(NodeId sender, NodeId receiver, MessageIndex m, const StoredCopy& snapshot,
                         double now_s) {
    auto& r = nodes_.at(receiver);
    auto& s = nodes_.at(sender);
    const MessageInfo& info = messages_.at(m);
    const std::uint32_t hops = snapshot.hop_count + 1;
    if (info.destination == receiver) {
      const bool first = !r.delivered.contains(m);
      r.delivered.insert(m);
      ++r.version;
      if (config_.protocol == Protocol::MaxProp) {
        r.acked.insert(m);
        s.acked.insert(m);
        purge_acked(sender, now_s);
      }
      return first ? ReceiveOutcome::Delivered : ReceiveOutcome::DuplicateDelivery;
    }
    if (r.buffer.contains(m) || (config_.protocol == Protocol::MaxProp && r.acked.contains(m)) ||
        r.role == Role::Destination) {
      emit({now_s, EventKind::Drop, m, receiver, receiver, hops});
      return ReceiveOutcome::Rejected;
    }
    const AcceptDecision d = accept_message(receiver, m);
    if (!d.accepted) {
      emit({now_s, EventKind::Drop, m, receiver, receiver, hops});
      return ReceiveOutcome::Rejected;
    }
    apply_evictions(receiver, d.evicted, now_s);
    StoredCopy copy{m, now_s, hops, 1};
    if (config_.protocol == Protocol::SprayAndWait) {
      copy.copies = snapshot.copies > 1 ? split_copies(snapshot.copies, config_.snw_mode).given : 1;
      if (StoredCopy* held = s.buffer.find(m); held && snapshot.copies > 1) {
        held->copies -= copy.copies;
        ++s.version;
      }
    }
    r.buffer.insert(copy, info.size_bytes);
    ++r.version;
    return ReceiveOutcome::Relayed;
  }

  // Drops every copy older than the configured TTL.
  void expire(double now_s) {
    if (!config_.ttl_s) return;
    for (NodeId n = 0; n < nodes_.size(); ++n) {
      std::vector<MessageIndex> dead;
      for (const auto& c : nodes_[n].buffer.copies())
        if (now_s - messages_[c.message].created_at_s > *config_.ttl_s) dead.push_back(c.message);
      for (auto m : dead) drop(n, m, now_s);
    }
  }

  // Total Spray-and-Wait budget of a message across all buffers.
  std::uint64_t total_copies(MessageIndex m) const {
    std::uint64_t sum = 0;
    for (const auto& n : nodes_)
      if (const StoredCopy* c = n.buffer.find(m)) sum += c->copies;
    return sum;
  }

  const std::vector<double>& path_costs(NodeId self) {
    auto& s = nodes_.at(self);
    if (!s.costs_valid) {
      s.costs = compute_path_costs(self, nodes_.size(), [&](NodeId u) { return vector_known_by(self, u); });
      s.costs_valid = true;
    }
    return s.costs;
  }

  std::span<const double> vector_known_by(NodeId self, NodeId u) {
    auto& k = nodes_.at(self).known.at(u);
    if (!k.present) {
      k.values = LikelihoodTable(u, nodes_.size());
      k.present = true;
      k.stamp = -std::numeric_limits<double>::infinity();
    }
    return k.values.values();
  }

 private:
  struct KnownVector {
    LikelihoodTable values;
    double stamp = -std::numeric_limits<double>::infinity();
    bool present = false;
  };

  struct NodeState {
    Role role = Role::Carrier;
    Buffer buffer;
    MessageSet delivered;  // ids received as final recipient
    MessageSet acked;      // MaxProp
    std::vector<KnownVector> known;  // MaxProp; known[self] is the own table
    std::vector<double> costs;
    bool costs_valid = false;
    std::uint64_t version = 0;
  };

  void emit(const RoutingEvent& e) {
    if (sink_) sink_(e);
  }

  bool peer_wants(NodeId self, NodeId peer, const StoredCopy& c) const {
    const auto& p = nodes_[peer];
    const MessageInfo& info = messages_[c.message];
    if (info.destination == self) return false;
    if (p.buffer.contains(c.message) || p.delivered.contains(c.message)) return false;
    if (p.role == Role::Destination && info.destination != peer) return false;
    if (config_.protocol == Protocol::MaxProp && p.acked.contains(c.message)) return false;
    if (config_.protocol == Protocol::SprayAndWait && c.copies <= 1 && info.destination != peer) return false;
    if (info.destination != peer) {
      if (info.size_bytes > p.buffer.capacity()) return false;
      if (!config_.eviction && info.size_bytes > p.buffer.free_bytes()) return false;
    }
    return true;
  }

  // Picks victims so that message m fits at node. `evictable` filters
  // candidates; oldest_first selects the plain FIFO policy, otherwise the
  // MaxProp policy (highest cost among copies at or past the hop threshold,
  // then oldest received).
  template <typename Evictable>
  AcceptDecision make_room(NodeId node, MessageIndex m, Evictable&& evictable, bool oldest_first) {
    const Buffer& b = nodes_.at(node).buffer;
    const std::uint64_t size = messages_.at(m).size_bytes;
    if (size > b.capacity()) return {};
    if (size <= b.free_bytes()) return {true, {}};
    if (!config_.eviction) return {};
    std::vector<const StoredCopy*> candidates;
    for (const auto& c : b.copies())
      if (evictable(c)) candidates.push_back(&c);
    if (!oldest_first) {
      const auto& cost = path_costs(node);
      const std::uint32_t threshold = config_.maxprop_hop_threshold;
      std::stable_sort(candidates.begin(), candidates.end(), [&](const StoredCopy* x, const StoredCopy* y) {
        const bool hx = x->hop_count >= threshold, hy = y->hop_count >= threshold;
        if (hx != hy) return hx;
        if (hx) {
          const double cx = cost[messages_[x->message].destination];
          const double cy = cost[messages_[y->message].destination];
          if (cx != cy) return cx > cy;
        }
        return false;  // stable: receive order
      });
    }
    AcceptDecision d;
    std::uint64_t freed = b.free_bytes();
    for (const auto* c : candidates) {
      if (freed >= size) break;
      d.evicted.push_back(c->message);
      freed += messages_[c->message].size_bytes;
    }
    if (freed < size) return {};
    d.accepted = true;
    return d;
  }

  void apply_evictions(NodeId node, const std::vector<MessageIndex>& victims, double now_s) {
    for (auto v : victims) drop(node, v, now_s);
  }

  void drop(NodeId node, MessageIndex m, double now_s) {
    auto& n = nodes_.at(node);
    const StoredCopy* c = n.buffer.find(m);
    if (!c) return;
    const std::uint32_t hops = c->hop_count;
    n.buffer.erase(m, messages_[m].size_bytes);
    ++n.version;
    emit({now_s, EventKind::Drop, m, node, node, hops});
  }

  void purge_acked(NodeId node, double now_s) {
    auto& n = nodes_.at(node);
    std::vector<MessageIndex> victims;
    for (const auto& c : n.buffer.copies())
      if (n.acked.contains(c.message)) victims.push_back(c.message);
    for (auto m : victims) drop(node, m, now_s);
    ++n.version;
  }

  RouterConfig config_;
  EventSink sink_;
  std::vector<NodeState> nodes_;
  std::vector<MessageInfo> messages_;
};

}  // namespace dtnsim
