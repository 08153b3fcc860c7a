/*
 * C calling convention for an out-of-process-language temporal neighbor
 * sampler. A backend shared library exports these three symbols; the
 * primary component loads it at runtime and falls back to the reference
 * sampler when it is missing.
 *
 * Columns: node ids are int64, times are float64 (IEEE-754), event indices
 * are int32. Every buffer is caller-allocated and sized explicitly.
 *
 * Query output layout is row-major [query_count x k]. Slot j of query i holds
 * the j-th most recent event touching the query node with time strictly less
 * than the query time (ties broken by larger event index first). Slots at or
 * beyond valid_counts[i] hold id = node_count, time = 0.0, edge index = -1.
 */
#ifndef PTCL_SAMPLER_ABI_H
#define PTCL_SAMPLER_ABI_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ptcl_sampler_index ptcl_sampler_index;

/* Events must be sorted by time; event i has event index i. Returns NULL on
 * invalid input. */
typedef ptcl_sampler_index* (*ptcl_sampler_build_index_fn)(const int64_t* sources, const int64_t* destinations,
                                                          const double* timestamps, size_t event_count,
                                                          int64_t node_count);

/* Returns 0 on success, nonzero on invalid arguments. */
typedef int (*ptcl_sampler_query_fn)(const ptcl_sampler_index* index, const int64_t* query_nodes,
                                     const double* query_times, size_t query_count, size_t k,
                                     int64_t* out_neighbor_ids, double* out_neighbor_times,
                                     int32_t* out_edge_indices, int32_t* out_valid_counts);

typedef void (*ptcl_sampler_free_fn)(ptcl_sampler_index* index);

#define PTCL_SAMPLER_BUILD_INDEX_SYMBOL "ptcl_sampler_build_index"
#define PTCL_SAMPLER_QUERY_SYMBOL "ptcl_sampler_query"
#define PTCL_SAMPLER_FREE_SYMBOL "ptcl_sampler_free"

#ifdef __cplusplus
}
#endif

#endif /* PTCL_SAMPLER_ABI_H */
