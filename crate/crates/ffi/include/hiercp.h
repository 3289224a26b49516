#ifndef HIERCP_H
#define HIERCP_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define HCP_MODE_MAIN 0

#define HCP_MODE_FIXED_K 1

#define HCP_MODE_NO_MULTI_NODE 2

typedef enum HcpStatus {
  HCP_STATUS_OK = 0,
  HCP_STATUS_NULL_POINTER = 1,
  HCP_STATUS_INVALID_ARGUMENT = 2,
  HCP_STATUS_PARSE = 3,
  HCP_STATUS_VALIDATION = 4,
  HCP_STATUS_IO = 5,
  HCP_STATUS_CONFIG = 6,
  HCP_STATUS_INTERNAL = 7,
  HCP_STATUS_PANIC = 8,
} HcpStatus;

typedef struct HcpAssignment HcpAssignment;

typedef struct HcpNetwork HcpNetwork;

typedef struct HcpSamples HcpSamples;

/**
 * Sampler settings; start from [`hcp_sampler_config_default`].
 */
typedef struct HcpSamplerConfig {
  uint64_t steps;
  uint32_t runs;
  uint32_t init_k;
  double multi_node_prob;
  uint64_t thin;
  uint64_t seed;
  uint32_t k_max;
  /**
   * One of the `HCP_MODE_*` constants.
   */
  uint32_t mode;
  /**
   * Nonzero to draw multi-node layers from the second layer onward.
   */
  uint8_t restrict_multi_node_layer1;
  uint64_t burn_in;
  /**
   * Nonzero to take every group-addition branch without a layer draw.
   */
  uint8_t ungated_group_addition;
} HcpSamplerConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *hcp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hcp_version(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HcpStatus hcp_network_load(const char *path, struct HcpNetwork **out_net);

/**
 * Builds a network from `edge_count` triples `(layer, i, j)` stored
 * contiguously in `edges`.
 *
 * # Safety
 * `edges` must point to `3 * edge_count` readable values (or be null when
 * `edge_count` is 0); `out` must be writable.
 */
enum HcpStatus hcp_network_from_edges(uintptr_t n,
                                      uintptr_t layers,
                                      const uint32_t *edges,
                                      uintptr_t edge_count,
                                      struct HcpNetwork **out_net);

/**
 * # Safety
 * `net` must be null or a handle from this library not yet freed.
 */
void hcp_network_free(struct HcpNetwork *net);

/**
 * # Safety
 * `net` must be a live handle; the out-pointers must be writable.
 */
enum HcpStatus hcp_network_shape(const struct HcpNetwork *net,
                                 uintptr_t *out_nodes,
                                 uintptr_t *out_layers);

/**
 * # Safety
 * `out` must be writable.
 */
enum HcpStatus hcp_sampler_config_default(struct HcpSamplerConfig *config);

/**
 * Runs the sampler and returns every saved record, ordered by run.
 *
 * # Safety
 * `net` and `config` must be valid; `out` must be writable.
 */
enum HcpStatus hcp_run(const struct HcpNetwork *net,
                       const struct HcpSamplerConfig *config,
                       struct HcpSamples **out_samples);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HcpStatus hcp_samples_load(const char *path, struct HcpSamples **out_samples);

/**
 * # Safety
 * `samples` must be a live handle; `path` a NUL-terminated string.
 */
enum HcpStatus hcp_samples_save(const struct HcpSamples *samples, const char *path);

/**
 * # Safety
 * `samples` must be a live handle; `out` must be writable.
 */
enum HcpStatus hcp_samples_len(const struct HcpSamples *samples, uintptr_t *out_len);

/**
 * Copy of record `index` as a new assignment handle, with its run id and
 * step written to the optional `out_run` / `out_step`.
 *
 * # Safety
 * `samples` must be a live handle; `out` must be writable; `out_run` and
 * `out_step` may be null.
 */
enum HcpStatus hcp_samples_get(const struct HcpSamples *samples,
                               uintptr_t index,
                               struct HcpAssignment **out_assignment,
                               uintptr_t *out_run,
                               uint64_t *out_step);

/**
 * # Safety
 * `samples` must be null or a live handle.
 */
void hcp_samples_free(struct HcpSamples *samples);

/**
 * Consensus assignment of the records (modal `k`, then the most frequent
 * pattern per node-layer).
 *
 * # Safety
 * `samples` must be a live handle; `out` must be writable.
 */
enum HcpStatus hcp_consensus(const struct HcpSamples *samples,
                             struct HcpAssignment **out_assignment);

/**
 * # Safety
 * `a` must be a live handle; the out-pointers must be writable.
 */
enum HcpStatus hcp_assignment_shape(const struct HcpAssignment *a,
                                    uintptr_t *out_nodes,
                                    uintptr_t *out_layers,
                                    uintptr_t *out_k);

/**
 * Membership bits of node-layer `(layer, node)`: bit `r - 1` is group `r`.
 *
 * # Safety
 * `a` must be a live handle; `out` must be writable.
 */
enum HcpStatus hcp_assignment_pattern(const struct HcpAssignment *a,
                                      uintptr_t layer,
                                      uintptr_t node,
                                      uint64_t *out_pattern);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HcpStatus hcp_assignment_load(const char *path, struct HcpAssignment **out_assignment);

/**
 * # Safety
 * `a` must be a live handle; `path` a NUL-terminated string.
 */
enum HcpStatus hcp_assignment_save(const struct HcpAssignment *a, const char *path);

/**
 * # Safety
 * `a` must be null or a live handle.
 */
void hcp_assignment_free(struct HcpAssignment *a);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HIERCP_H */
