#ifndef DRR_GOSSIP_FFI_H
#define DRR_GOSSIP_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Protocols runnable through the C API.
 */
typedef enum {
  DRRG_PROTOCOL_DRR_GOSSIP_MAX = 0,
  DRRG_PROTOCOL_DRR_GOSSIP_AVE = 1,
  DRRG_PROTOCOL_UNIFORM_PUSH_SUM = 2,
  DRRG_PROTOCOL_DRR_ONLY = 3,
  DRRG_PROTOCOL_LOCAL_DRR_ONLY = 4,
} DrrgProtocol;

/**
 * Status codes mirroring the library's error taxonomy.
 */
typedef enum {
  DRRG_STATUS_OK = 0,
  DRRG_STATUS_INVALID_ARGUMENT = 1,
  DRRG_STATUS_CONSTRUCTION_FAILURE = 2,
  DRRG_STATUS_INPUT_FORMAT = 3,
  DRRG_STATUS_MODEL_VIOLATION = 4,
  DRRG_STATUS_USAGE = 5,
  DRRG_STATUS_EMPTY_INPUT = 6,
  DRRG_STATUS_IO = 7,
  DRRG_STATUS_NULL_POINTER = 8,
  DRRG_STATUS_UTF8 = 9,
  DRRG_STATUS_INTERNAL = 10,
} DrrgStatus;

/**
 * Opaque graph handle.
 */
typedef struct DrrgGraph DrrgGraph;

/**
 * Opaque result handle for one finished protocol run.
 */
typedef struct DrrgResult DrrgResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message into `buf` (NUL-terminated, truncated to
 * `cap`); returns the full message length excluding the terminator.
 *
 * # Safety
 * `buf` must be NULL or point to at least `cap` writable bytes.
 */
uintptr_t drrg_last_error_message(char *buf, uintptr_t cap);

/**
 * Library version as a static string.
 */
const char *drrg_version(void);

/**
 * Complete graph on `n` nodes.
 */
DrrgStatus drrg_graph_complete(uintptr_t n, DrrgGraph **out);

/**
 * Random simple d-regular graph, deterministic in `(n, d, seed)`.
 */
DrrgStatus drrg_graph_d_regular(uintptr_t n, uintptr_t d, uint64_t seed, DrrgGraph **out);

/**
 * Idealized chord ring on `2^bits` nodes.
 */
DrrgStatus drrg_graph_chord(uint32_t bits, DrrgGraph **out);

/**
 * Custom graph from a whitespace-separated "u v" edge-list file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string or NULL.
 */
DrrgStatus drrg_graph_from_edge_file(const char *path, DrrgGraph **out);

/**
 * # Safety
 * `g` must be a pointer from a `drrg_graph_*` constructor, not yet freed.
 */
void drrg_graph_free(DrrgGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle or NULL.
 */
uintptr_t drrg_graph_node_count(const DrrgGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle or NULL.
 */
uint64_t drrg_graph_edge_count(const DrrgGraph *g);

/**
 * Degree of `node`, or -1 if out of range.
 *
 * # Safety
 * `g` must be a live graph handle or NULL.
 */
int64_t drrg_graph_degree(const DrrgGraph *g, uint32_t node);

/**
 * Run one protocol trial on the graph's topology.
 *
 * `values_spec` follows the CLI grammar (`uniform:a,b`, `constant:v`,
 * `zipf:s`); pass NULL for the default uniform(0, 1). The ranking mode is
 * inferred from the topology: sampled on complete graphs, local otherwise.
 *
 * # Safety
 * `graph` must be a live graph handle; `values_spec` NULL or a valid
 * NUL-terminated string; `out` a valid out-pointer.
 */
DrrgStatus drrg_run(const DrrgGraph *graph,
                    DrrgProtocol protocol,
                    double delta,
                    uint64_t seed,
                    const char *values_spec,
                    DrrgResult **out);

/**
 * # Safety
 * `r` must be a pointer from `drrg_run`, not yet freed.
 */
void drrg_result_free(DrrgResult *r);

/**
 * # Safety
 * `r` must be a live result handle or NULL.
 */
uintptr_t drrg_result_node_count(const DrrgResult *r);

/**
 * Final answer at `node`. Returns `InvalidArgument` for nodes that hold no
 * answer (crashed, or a ranking-only protocol).
 *
 * # Safety
 * `r` must be a live result handle; `out` a valid pointer.
 */
DrrgStatus drrg_result_answer(const DrrgResult *r, uintptr_t node, double *out);

/**
 * Ground-truth aggregate, or NaN when the protocol has none.
 *
 * # Safety
 * `r` must be a live result handle or NULL.
 */
double drrg_result_oracle(const DrrgResult *r);

/**
 * # Safety
 * `r` must be a live result handle or NULL.
 */
bool drrg_result_correct(const DrrgResult *r);

/**
 * Worst per-node relative error, or NaN when no oracle applies.
 *
 * # Safety
 * `r` must be a live result handle or NULL.
 */
double drrg_result_max_rel_error(const DrrgResult *r);

/**
 * # Safety
 * `r` must be a live result handle or NULL.
 */
uint64_t drrg_result_total_rounds(const DrrgResult *r);

/**
 * # Safety
 * `r` must be a live result handle or NULL.
 */
uint64_t drrg_result_total_messages(const DrrgResult *r);

/**
 * Full metrics record as a JSON string; free with `drrg_string_free`.
 *
 * # Safety
 * `r` must be a live result handle; `out` a valid out-pointer.
 */
DrrgStatus drrg_result_metrics_json(const DrrgResult *r, char **out);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer returned by this library, not yet freed.
 */
void drrg_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DRR_GOSSIP_FFI_H */
