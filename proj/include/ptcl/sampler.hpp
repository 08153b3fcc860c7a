#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ptcl/graph.hpp"

namespace ptcl {

/// Columnar answer to a batch of (node, time) neighbor queries, laid out as
/// [query_count x k]. Slots past valid_counts[i] are padding: id =
/// node_count, time = 0, edge index = -1.
struct NeighborBatch {
  std::size_t query_count = 0;
  std::size_t k = 0;
  std::vector<NodeId> neighbor_ids;
  std::vector<Timestamp> neighbor_times;
  std::vector<std::int32_t> edge_indices;
  std::vector<std::int32_t> valid_counts;

  bool operator==(const NeighborBatch&) const = default;
};

/// Lightweight (source, destination, time) triple used for link batches.
struct Interaction {
  NodeId source = 0;
  NodeId destination = 0;
  Timestamp timestamp = 0.0;

  bool operator==(const Interaction&) const = default;
};

class NeighborSampler {
 public:
  virtual ~NeighborSampler() = default;

  /// Up to k most recent events of each query node strictly before the
  /// query time, most recent first. The other endpoint is the neighbor.
  virtual NeighborBatch recent_neighbors(std::span<const NodeId> nodes, std::span<const Timestamp> times,
                                         std::size_t k) const = 0;

  virtual std::string name() const = 0;
};

/// Correctness-first sampler over the graph's per-node adjacency lists.
class ReferenceSampler final : public NeighborSampler {
 public:
  explicit ReferenceSampler(const DynamicGraph& graph) : graph_(&graph) {}

  NeighborBatch recent_neighbors(std::span<const NodeId> nodes, std::span<const Timestamp> times,
                                 std::size_t k) const override;
  std::string name() const override { return "reference"; }

 private:
  const DynamicGraph* graph_;
};

/// Free function form of the reference contract.
NeighborBatch recent_neighbors(const DynamicGraph& graph, std::span<const NodeId> nodes,
                               std::span<const Timestamp> times, std::size_t k);

/// One uniformly corrupted negative per positive: the destination is
/// replaced by a node id different from the true destination. Deterministic
/// given seed. Throws GraphError when the graph has fewer than two nodes.
std::vector<Interaction> negative_sample(const DynamicGraph& graph, std::span<const Interaction> positives,
                                         std::uint64_t seed);

/// Sampler backed by a shared library exporting the C ABI in sampler_abi.h.
class NativeSampler final : public NeighborSampler {
 public:
  /// Throws std::runtime_error when the library or its symbols are missing.
  NativeSampler(const DynamicGraph& graph, const std::string& library_path);
  ~NativeSampler() override;
  NativeSampler(const NativeSampler&) = delete;
  NativeSampler& operator=(const NativeSampler&) = delete;

  NeighborBatch recent_neighbors(std::span<const NodeId> nodes, std::span<const Timestamp> times,
                                 std::size_t k) const override;
  std::string name() const override { return "native"; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t node_count_;
};

enum class SamplerBackend { reference, native };

struct SamplerOptions {
  SamplerBackend backend = SamplerBackend::reference;
  /// Shared library path for the native backend. Empty means the
  /// PTCL_SAMPLER_LIB environment variable.
  std::string library_path;
};

/// Returns the requested sampler, or the reference sampler (with a warning on
/// stderr) when the native backend cannot be loaded.
std::unique_ptr<NeighborSampler> make_sampler(const DynamicGraph& graph, const SamplerOptions& options);

}  // namespace ptcl
