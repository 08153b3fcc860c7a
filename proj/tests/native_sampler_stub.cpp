// Test-only backend for the sampler C ABI. Deliberately naive: a per-node
// event list scanned backwards for every query.
#include <cstdint>
#include <cstring>
#include <vector>

#include "ptcl/sampler_abi.h"

struct ptcl_sampler_index {
  std::int64_t node_count = 0;
  std::vector<std::int64_t> src, dst;
  std::vector<double> ts;
  std::vector<std::vector<std::int32_t>> by_node;
};

extern "C" {

ptcl_sampler_index* ptcl_sampler_build_index(const int64_t* sources, const int64_t* destinations,
                                             const double* timestamps, size_t event_count, int64_t node_count) {
  if (node_count < 0 || (event_count > 0 && (!sources || !destinations || !timestamps))) return nullptr;
  auto* index = new ptcl_sampler_index;
  index->node_count = node_count;
  index->by_node.resize(static_cast<size_t>(node_count));
  for (size_t e = 0; e < event_count; ++e) {
    if (e > 0 && timestamps[e] < timestamps[e - 1]) {
      delete index;
      return nullptr;
    }
    const int64_t u = sources[e], v = destinations[e];
    if (u < 0 || v < 0 || u >= node_count || v >= node_count) {
      delete index;
      return nullptr;
    }
    index->src.push_back(u);
    index->dst.push_back(v);
    index->ts.push_back(timestamps[e]);
    index->by_node[u].push_back(static_cast<int32_t>(e));
    index->by_node[v].push_back(static_cast<int32_t>(e));
  }
  return index;
}

int ptcl_sampler_query(const ptcl_sampler_index* index, const int64_t* query_nodes, const double* query_times,
                       size_t query_count, size_t k, int64_t* out_neighbor_ids, double* out_neighbor_times,
                       int32_t* out_edge_indices, int32_t* out_valid_counts) {
  if (!index) return 1;
  for (size_t q = 0; q < query_count; ++q) {
    const int64_t u = query_nodes[q];
    if (u < 0 || u >= index->node_count) return 2;
    size_t filled = 0;
    const auto& list = index->by_node[u];
    for (size_t i = list.size(); i-- > 0 && filled < k;) {
      const int32_t e = list[i];
      if (!(index->ts[e] < query_times[q])) continue;
      const size_t slot = q * k + filled++;
      out_neighbor_ids[slot] = index->src[e] == u ? index->dst[e] : index->src[e];
      out_neighbor_times[slot] = index->ts[e];
      out_edge_indices[slot] = e;
    }
    out_valid_counts[q] = static_cast<int32_t>(filled);
    for (size_t j = filled; j < k; ++j) {
      out_neighbor_ids[q * k + j] = index->node_count;
      out_neighbor_times[q * k + j] = 0.0;
      out_edge_indices[q * k + j] = -1;
    }
  }
  return 0;
}

void ptcl_sampler_free(ptcl_sampler_index* index) { delete index; }

}
