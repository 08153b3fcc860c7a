#pragma once

// Continuous-time dynamic graph: a chronologically ordered stream of
// interaction events with per-node timelines.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ptcl/matrix.hpp"

namespace ptcl {

using NodeId = std::int64_t;
using Timestamp = double;
using ClassId = std::int32_t;

inline constexpr ClassId kUnlabeled = -1;

/// One timestamped interaction (u, v, t) with its edge features.
struct Event {
  NodeId source = 0;
  NodeId destination = 0;
  Timestamp timestamp = 0.0;
  std::vector<double> edge_features;
  /// Ordinal position in the chronological stream. Used as the tiebreak for
  /// equal timestamps; rewritten to the stored position by build_graph.
  std::int64_t event_index = 0;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable event store with a per-node temporal index.
///
/// Events are sorted by (timestamp, event_index). For every node u the
/// timeline holds the distinct timestamps of the events touching u in
/// ascending order, and final_timestamp(u) is its maximum. Nodes that never
/// appear in an event have an empty timeline.
class DynamicGraph {
 public:
  DynamicGraph() = default;

  std::size_t node_count() const { return node_count_; }
  std::size_t event_count() const { return sources_.size(); }
  std::size_t class_count() const { return class_count_; }
  std::size_t node_feature_dim() const { return static_cast<std::size_t>(node_features_.cols()); }
  std::size_t edge_feature_dim() const { return static_cast<std::size_t>(edge_features_.cols()); }

  NodeId source(std::size_t e) const { return sources_[e]; }
  NodeId destination(std::size_t e) const { return destinations_[e]; }
  Timestamp timestamp(std::size_t e) const { return timestamps_[e]; }

  std::span<const NodeId> sources() const { return sources_; }
  std::span<const NodeId> destinations() const { return destinations_; }
  std::span<const Timestamp> timestamps() const { return timestamps_; }

  const Matrix& node_features() const { return node_features_; }
  const Matrix& edge_features() const { return edge_features_; }

  /// Materializes stored event e (event_index == e).
  Event event(std::size_t e) const;
  std::vector<Event> events() const;

  /// Distinct timestamps of node u, ascending (the set T_u).
  std::span<const Timestamp> timeline(NodeId u) const;
  bool has_events(NodeId u) const { return !timeline(u).empty(); }
  /// max of the timeline; throws for nodes without events.
  Timestamp final_timestamp(NodeId u) const;

  /// Stored positions of the events touching u, sorted by (timestamp,
  /// event_index). A self-loop is listed twice.
  std::span<const std::int32_t> adjacency(NodeId u) const;

  Timestamp first_time() const { return timestamps_.empty() ? 0.0 : timestamps_.front(); }
  Timestamp last_time() const { return timestamps_.empty() ? 0.0 : timestamps_.back(); }

 private:
  friend DynamicGraph build_graph(std::vector<Event>, Matrix, std::size_t, std::size_t);

  std::size_t node_count_ = 0;
  std::size_t class_count_ = 0;
  std::vector<NodeId> sources_;
  std::vector<NodeId> destinations_;
  std::vector<Timestamp> timestamps_;
  Matrix edge_features_;
  Matrix node_features_;

  std::vector<std::size_t> timeline_offsets_;
  std::vector<Timestamp> timeline_values_;
  std::vector<std::size_t> adjacency_offsets_;
  std::vector<std::int32_t> adjacency_events_;
};

/// Builds an immutable graph. node_features has one row per node (may have
/// zero columns for non-attributed graphs); node_count is its row count.
/// edge_feature_dim is used when events is empty of features; every event
/// must carry exactly that many features.
DynamicGraph build_graph(std::vector<Event> events, Matrix node_features, std::size_t class_count,
                         std::size_t edge_feature_dim);

/// Convenience overload inferring the edge feature dimension from the first event.
DynamicGraph build_graph(std::vector<Event> events, Matrix node_features, std::size_t class_count);

/// d_u^t: the number of timestamps of u strictly later than t.
/// Throws GraphError when t is not in the timeline of u.
std::int64_t temporal_distance(const DynamicGraph& graph, NodeId u, Timestamp t);

enum class SplitMode { chronological, stratified };

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

/// Disjoint train/val/test node sets with the boundary time T_B. Every train
/// node has T_u <= boundary_time, every val/test node T_u > boundary_time.
struct SplitSpec {
  std::vector<NodeId> train_nodes;
  std::vector<NodeId> val_nodes;
  std::vector<NodeId> test_nodes;
  Timestamp boundary_time = 0.0;
};

/// Partitions labeled nodes (final_labels[u] != kUnlabeled) by their final
/// timestamps. final_labels has one entry per graph node.
SplitSpec split_nodes(const DynamicGraph& graph, std::span<const ClassId> final_labels,
                      const SplitRatios& ratios, std::uint64_t seed, SplitMode mode);

}  // namespace ptcl
