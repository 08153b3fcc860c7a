#include "ptcl/sampler.hpp"

#include <dlfcn.h>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <random>
#include <stdexcept>

#include "ptcl/sampler_abi.h"

namespace ptcl {

namespace {

NeighborBatch empty_batch(std::size_t queries, std::size_t k, std::size_t node_count) {
  NeighborBatch batch;
  batch.query_count = queries;
  batch.k = k;
  batch.neighbor_ids.assign(queries * k, static_cast<NodeId>(node_count));
  batch.neighbor_times.assign(queries * k, 0.0);
  batch.edge_indices.assign(queries * k, -1);
  batch.valid_counts.assign(queries, 0);
  return batch;
}

void check_query_shape(std::span<const NodeId> nodes, std::span<const Timestamp> times, std::size_t k) {
  if (nodes.size() != times.size()) throw std::invalid_argument("query node and time columns differ in length");
  if (k == 0) throw std::invalid_argument("k must be positive");
}

}  // namespace

NeighborBatch recent_neighbors(const DynamicGraph& graph, std::span<const NodeId> nodes,
                               std::span<const Timestamp> times, std::size_t k) {
  check_query_shape(nodes, times, k);
  NeighborBatch batch = empty_batch(nodes.size(), k, graph.node_count());
  const auto stamps = graph.timestamps();
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const NodeId u = nodes[q];
    // Padding ids from a previous hop have no history.
    if (u < 0 || static_cast<std::size_t>(u) >= graph.node_count()) continue;
    const auto adj = graph.adjacency(u);
    const Timestamp t = times[q];
    auto end = std::lower_bound(adj.begin(), adj.end(), t,
                                [&](std::int32_t pos, Timestamp value) { return stamps[pos] < value; });
    std::size_t filled = 0;
    while (end != adj.begin() && filled < k) {
      --end;
      const auto pos = static_cast<std::size_t>(*end);
      const std::size_t slot = q * k + filled;
      batch.neighbor_ids[slot] = graph.source(pos) == u ? graph.destination(pos) : graph.source(pos);
      batch.neighbor_times[slot] = stamps[pos];
      batch.edge_indices[slot] = static_cast<std::int32_t>(pos);
      ++filled;
    }
    batch.valid_counts[q] = static_cast<std::int32_t>(filled);
  }
  return batch;
}

NeighborBatch ReferenceSampler::recent_neighbors(std::span<const NodeId> nodes, std::span<const Timestamp> times,
                                                 std::size_t k) const {
  return ptcl::recent_neighbors(*graph_, nodes, times, k);
}

std::vector<Interaction> negative_sample(const DynamicGraph& graph, std::span<const Interaction> positives,
                                         std::uint64_t seed) {
  if (graph.node_count() < 2) throw GraphError("negative sampling needs at least two nodes");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(graph.node_count()) - 1);
  std::vector<Interaction> out;
  out.reserve(positives.size());
  for (const Interaction& pos : positives) {
    NodeId corrupted = pick(rng);
    while (corrupted == pos.destination) corrupted = pick(rng);
    out.push_back({pos.source, corrupted, pos.timestamp});
  }
  return out;
}

struct NativeSampler::Impl {
  void* handle = nullptr;
  ptcl_sampler_build_index_fn build = nullptr;
  ptcl_sampler_query_fn query = nullptr;
  ptcl_sampler_free_fn release = nullptr;
  ptcl_sampler_index* index = nullptr;
};

NativeSampler::NativeSampler(const DynamicGraph& graph, const std::string& library_path)
    : impl_(std::make_unique<Impl>()), node_count_(graph.node_count()) {
  impl_->handle = dlopen(library_path.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (impl_->handle == nullptr) {
    const char* err = dlerror();
    throw std::runtime_error("cannot load sampler library '" + library_path + "': " + (err ? err : "unknown"));
  }
  impl_->build = reinterpret_cast<ptcl_sampler_build_index_fn>(dlsym(impl_->handle, PTCL_SAMPLER_BUILD_INDEX_SYMBOL));
  impl_->query = reinterpret_cast<ptcl_sampler_query_fn>(dlsym(impl_->handle, PTCL_SAMPLER_QUERY_SYMBOL));
  impl_->release = reinterpret_cast<ptcl_sampler_free_fn>(dlsym(impl_->handle, PTCL_SAMPLER_FREE_SYMBOL));
  if (!impl_->build || !impl_->query || !impl_->release) {
    dlclose(impl_->handle);
    throw std::runtime_error("sampler library '" + library_path + "' does not export the sampler ABI");
  }
  impl_->index = impl_->build(graph.sources().data(), graph.destinations().data(), graph.timestamps().data(),
                              graph.event_count(), static_cast<std::int64_t>(graph.node_count()));
  if (impl_->index == nullptr) {
    dlclose(impl_->handle);
    throw std::runtime_error("sampler library rejected the event columns");
  }
}

NativeSampler::~NativeSampler() {
  if (impl_ && impl_->index) impl_->release(impl_->index);
  if (impl_ && impl_->handle) dlclose(impl_->handle);
}

NeighborBatch NativeSampler::recent_neighbors(std::span<const NodeId> nodes, std::span<const Timestamp> times,
                                              std::size_t k) const {
  check_query_shape(nodes, times, k);
  NeighborBatch batch = empty_batch(nodes.size(), k, node_count_);
  const int rc = impl_->query(impl_->index, nodes.data(), times.data(), nodes.size(), k, batch.neighbor_ids.data(),
                              batch.neighbor_times.data(), batch.edge_indices.data(), batch.valid_counts.data());
  if (rc != 0) throw std::runtime_error("native sampler query failed with code " + std::to_string(rc));
  return batch;
}

std::unique_ptr<NeighborSampler> make_sampler(const DynamicGraph& graph, const SamplerOptions& options) {
  if (options.backend == SamplerBackend::native) {
    std::string path = options.library_path;
    if (path.empty()) {
      if (const char* env = std::getenv("PTCL_SAMPLER_LIB")) path = env;
    }
    if (!path.empty()) {
      try {
        return std::make_unique<NativeSampler>(graph, path);
      } catch (const std::exception& e) {
        std::cerr << "warning: " << e.what() << "; using the reference sampler\n";
      }
    } else {
      std::cerr << "warning: no native sampler library configured; using the reference sampler\n";
    }
  }
  return std::make_unique<ReferenceSampler>(graph);
}

}  // namespace ptcl
