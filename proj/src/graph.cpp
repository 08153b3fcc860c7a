#include "ptcl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

namespace ptcl {

Event DynamicGraph::event(std::size_t e) const {
  Event ev;
  ev.source = sources_[e];
  ev.destination = destinations_[e];
  ev.timestamp = timestamps_[e];
  ev.edge_features.assign(edge_features_.row(e).data(), edge_features_.row(e).data() + edge_features_.cols());
  ev.event_index = static_cast<std::int64_t>(e);
  return ev;
}

std::vector<Event> DynamicGraph::events() const {
  std::vector<Event> out;
  out.reserve(event_count());
  for (std::size_t e = 0; e < event_count(); ++e) out.push_back(event(e));
  return out;
}

std::span<const Timestamp> DynamicGraph::timeline(NodeId u) const {
  if (u < 0 || static_cast<std::size_t>(u) >= node_count_) {
    throw GraphError("node id " + std::to_string(u) + " out of range");
  }
  const auto begin = timeline_offsets_[u];
  const auto end = timeline_offsets_[u + 1];
  return {timeline_values_.data() + begin, end - begin};
}

Timestamp DynamicGraph::final_timestamp(NodeId u) const {
  const auto tl = timeline(u);
  if (tl.empty()) throw GraphError("node " + std::to_string(u) + " has no events");
  return tl.back();
}

std::span<const std::int32_t> DynamicGraph::adjacency(NodeId u) const {
  if (u < 0 || static_cast<std::size_t>(u) >= node_count_) {
    throw GraphError("node id " + std::to_string(u) + " out of range");
  }
  const auto begin = adjacency_offsets_[u];
  const auto end = adjacency_offsets_[u + 1];
  return {adjacency_events_.data() + begin, end - begin};
}

DynamicGraph build_graph(std::vector<Event> events, Matrix node_features, std::size_t class_count) {
  const std::size_t dim = events.empty() ? 0 : events.front().edge_features.size();
  return build_graph(std::move(events), std::move(node_features), class_count, dim);
}

DynamicGraph build_graph(std::vector<Event> events, Matrix node_features, std::size_t class_count,
                         std::size_t edge_feature_dim) {
  if (events.empty()) throw GraphError("event stream is empty");
  const auto node_count = static_cast<std::size_t>(node_features.rows());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& ev = events[i];
    if (!(ev.timestamp >= 0.0) || !std::isfinite(ev.timestamp)) {
      throw GraphError("event " + std::to_string(i) + " has an invalid timestamp");
    }
    if (ev.edge_features.size() != edge_feature_dim) {
      throw GraphError("event " + std::to_string(i) + " has " + std::to_string(ev.edge_features.size()) +
                       " edge features, expected " + std::to_string(edge_feature_dim));
    }
    if (ev.source < 0 || ev.destination < 0 || static_cast<std::size_t>(ev.source) >= node_count ||
        static_cast<std::size_t>(ev.destination) >= node_count) {
      throw GraphError("event " + std::to_string(i) + " references a node outside [0, " +
                       std::to_string(node_count) + ")");
    }
  }

  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (events[a].timestamp != events[b].timestamp) return events[a].timestamp < events[b].timestamp;
    return events[a].event_index < events[b].event_index;
  });

  DynamicGraph g;
  g.node_count_ = node_count;
  g.class_count_ = class_count;
  g.node_features_ = std::move(node_features);
  const std::size_t m = events.size();
  g.sources_.resize(m);
  g.destinations_.resize(m);
  g.timestamps_.resize(m);
  g.edge_features_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(edge_feature_dim));
  for (std::size_t pos = 0; pos < m; ++pos) {
    const Event& ev = events[order[pos]];
    g.sources_[pos] = ev.source;
    g.destinations_[pos] = ev.destination;
    g.timestamps_[pos] = ev.timestamp;
    for (std::size_t c = 0; c < edge_feature_dim; ++c) g.edge_features_(pos, c) = ev.edge_features[c];
  }

  // Adjacency in CSR form; iterating positions in order keeps each list sorted.
  std::vector<std::size_t> degree(node_count, 0);
  for (std::size_t pos = 0; pos < m; ++pos) {
    ++degree[g.sources_[pos]];
    ++degree[g.destinations_[pos]];
  }
  g.adjacency_offsets_.assign(node_count + 1, 0);
  for (std::size_t u = 0; u < node_count; ++u) g.adjacency_offsets_[u + 1] = g.adjacency_offsets_[u] + degree[u];
  g.adjacency_events_.resize(2 * m);
  std::vector<std::size_t> cursor(g.adjacency_offsets_.begin(), g.adjacency_offsets_.end() - 1);
  for (std::size_t pos = 0; pos < m; ++pos) {
    g.adjacency_events_[cursor[g.sources_[pos]]++] = static_cast<std::int32_t>(pos);
    g.adjacency_events_[cursor[g.destinations_[pos]]++] = static_cast<std::int32_t>(pos);
  }

  g.timeline_offsets_.assign(node_count + 1, 0);
  g.timeline_values_.reserve(2 * m);
  for (std::size_t u = 0; u < node_count; ++u) {
    g.timeline_offsets_[u] = g.timeline_values_.size();
    for (std::size_t i = g.adjacency_offsets_[u]; i < g.adjacency_offsets_[u + 1]; ++i) {
      const Timestamp t = g.timestamps_[g.adjacency_events_[i]];
      if (g.timeline_values_.size() == g.timeline_offsets_[u] || g.timeline_values_.back() != t) {
        g.timeline_values_.push_back(t);
      }
    }
  }
  g.timeline_offsets_[node_count] = g.timeline_values_.size();
  return g;
}

std::int64_t temporal_distance(const DynamicGraph& graph, NodeId u, Timestamp t) {
  const auto tl = graph.timeline(u);
  const auto it = std::lower_bound(tl.begin(), tl.end(), t);
  if (it == tl.end() || *it != t) {
    throw GraphError("timestamp is not in the timeline of node " + std::to_string(u));
  }
  return static_cast<std::int64_t>(tl.end() - (it + 1));
}

namespace {

struct SplitCounts {
  std::size_t train, val, test;
};

SplitCounts split_counts(std::size_t n, const SplitRatios& r) {
  const auto val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * r.val + 1e-9));
  const auto test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * r.test + 1e-9));
  return {n - val - test, val, test};
}

}  // namespace

SplitSpec split_nodes(const DynamicGraph& graph, std::span<const ClassId> final_labels, const SplitRatios& ratios,
                      std::uint64_t seed, SplitMode mode) {
  if (final_labels.size() != graph.node_count()) {
    throw GraphError("final label vector does not cover every node");
  }
  if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0) ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw GraphError("split ratios must be positive and sum to 1");
  }
  std::vector<NodeId> labeled;
  for (std::size_t u = 0; u < final_labels.size(); ++u) {
    if (final_labels[u] == kUnlabeled) continue;
    if (!graph.has_events(static_cast<NodeId>(u))) {
      throw GraphError("labeled node " + std::to_string(u) + " has no final timestamp");
    }
    labeled.push_back(static_cast<NodeId>(u));
  }
  if (labeled.size() < 3) throw GraphError("at least 3 labeled nodes are required to split");

  auto by_final_time = [&](NodeId a, NodeId b) {
    const auto ta = graph.final_timestamp(a);
    const auto tb = graph.final_timestamp(b);
    return ta != tb ? ta < tb : a < b;
  };

  SplitSpec split;
  if (mode == SplitMode::chronological) {
    std::sort(labeled.begin(), labeled.end(), by_final_time);
    const auto counts = split_counts(labeled.size(), ratios);
    std::size_t cut = counts.train;
    // Nodes tied with the last train node's final time cannot sit after T_B.
    const Timestamp boundary = graph.final_timestamp(labeled[cut - 1]);
    while (cut < labeled.size() && graph.final_timestamp(labeled[cut]) == boundary) ++cut;
    const std::size_t val_end = std::min(labeled.size(), cut + counts.val);
    split.train_nodes.assign(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(cut));
    split.val_nodes.assign(labeled.begin() + static_cast<std::ptrdiff_t>(cut),
                           labeled.begin() + static_cast<std::ptrdiff_t>(val_end));
    split.test_nodes.assign(labeled.begin() + static_cast<std::ptrdiff_t>(val_end), labeled.end());
    split.boundary_time = boundary;
  } else {
    // Per class: the earliest-finishing share goes to train, the remainder is
    // shuffled between val and test in the val:test proportion.
    std::map<ClassId, std::vector<NodeId>> by_class;
    for (NodeId u : labeled) by_class[final_labels[u]].push_back(u);
    std::mt19937_64 rng(seed);
    std::vector<NodeId> rest;
    std::map<ClassId, std::vector<NodeId>> rest_by_class;
    for (auto& [cls, nodes] : by_class) {
      std::sort(nodes.begin(), nodes.end(), by_final_time);
      const auto counts = split_counts(nodes.size(), ratios);
      split.train_nodes.insert(split.train_nodes.end(), nodes.begin(),
                               nodes.begin() + static_cast<std::ptrdiff_t>(counts.train));
      rest_by_class[cls].assign(nodes.begin() + static_cast<std::ptrdiff_t>(counts.train), nodes.end());
    }
    Timestamp boundary = 0.0;
    for (NodeId u : split.train_nodes) boundary = std::max(boundary, graph.final_timestamp(u));
    for (auto& [cls, nodes] : rest_by_class) {
      std::vector<NodeId> late;
      for (NodeId u : nodes) {
        if (graph.final_timestamp(u) <= boundary) {
          split.train_nodes.push_back(u);
        } else {
          late.push_back(u);
        }
      }
      std::shuffle(late.begin(), late.end(), rng);
      const auto n_val = static_cast<std::size_t>(
          std::llround(static_cast<double>(late.size()) * ratios.val / (ratios.val + ratios.test)));
      split.val_nodes.insert(split.val_nodes.end(), late.begin(), late.begin() + static_cast<std::ptrdiff_t>(n_val));
      split.test_nodes.insert(split.test_nodes.end(), late.begin() + static_cast<std::ptrdiff_t>(n_val), late.end());
    }
    std::sort(split.train_nodes.begin(), split.train_nodes.end());
    std::sort(split.val_nodes.begin(), split.val_nodes.end());
    std::sort(split.test_nodes.begin(), split.test_nodes.end());
    split.boundary_time = boundary;
  }
  return split;
}

}  // namespace ptcl
