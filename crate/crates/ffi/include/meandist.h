#ifndef MEANDIST_H
#define MEANDIST_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MD_STATUS_OK = 0,
  MD_STATUS_NULL_POINTER = 1,
  MD_STATUS_INVALID_UTF8 = 2,
  MD_STATUS_INVALID_JSON = 3,
  MD_STATUS_INVALID_GRAPH = 4,
  MD_STATUS_UNKNOWN_ID = 5,
  MD_STATUS_INVALID_POINT = 6,
  MD_STATUS_INVALID_ARGUMENT = 7,
  MD_STATUS_NO_CONVERGENCE = 8,
  MD_STATUS_PANIC = 9,
} MdStatus;

/**
 * Opaque graph handle.
 */
typedef struct MdGraph MdGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Owned by the
 * library; valid until the next call on the same thread.
 */
const char *md_last_error_message(void);

/**
 * Parses and validates a graph in the JSON graph format.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
MdStatus md_graph_from_json(const char *json, MdGraph **out);

/**
 * Releases a handle; NULL is ignored.
 *
 * # Safety
 * `g` must come from this library and not be used afterwards.
 */
void md_graph_free(MdGraph *g);

/**
 * Canonical JSON of the graph; free with [`md_string_free`].
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
MdStatus md_graph_to_json(const MdGraph *g, char **out);

/**
 * Releases a string returned by the library; NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void md_string_free(char *s);

/**
 * Vertex count, or 0 for NULL.
 *
 * # Safety
 * `g` must be NULL or a live handle.
 */
size_t md_graph_vertex_count(const MdGraph *g);

/**
 * Edge count, or 0 for NULL.
 *
 * # Safety
 * `g` must be NULL or a live handle.
 */
size_t md_graph_edge_count(const MdGraph *g);

/**
 * Total length, or NaN for NULL.
 *
 * # Safety
 * `g` must be NULL or a live handle.
 */
double md_graph_total_length(const MdGraph *g);

/**
 * Exact mean distance.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
MdStatus md_rho(const MdGraph *g, double *out);

/**
 * Exact diameter.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
MdStatus md_diameter(const MdGraph *g, double *out);

/**
 * Mean distance function at a point `edgeId:offset`.
 *
 * # Safety
 * `g` must be a live handle; `point` NUL-terminated; `out` writable.
 */
MdStatus md_rho_at_point(const MdGraph *g, const char *point, double *out);

/**
 * Distance between two points given as `edgeId:offset`.
 *
 * # Safety
 * `g` must be a live handle; `from`, `to` NUL-terminated; `out` writable.
 */
MdStatus md_point_distance(const MdGraph *g, const char *from, const char *to, double *out);

/**
 * Spectral gap with relative tolerance `tol`. `error_estimate` may be NULL.
 *
 * # Safety
 * `g` must be a live handle; `value` writable; `error_estimate` NULL or writable.
 */
MdStatus md_spectral_gap(const MdGraph *g, double tol, double *value, double *error_estimate);

/**
 * First eigenvalue with a Dirichlet condition at `vertex`.
 *
 * # Safety
 * `g` must be a live handle; `vertex` NUL-terminated; `value` writable;
 * `error_estimate` NULL or writable.
 */
MdStatus md_dirichlet_eigenvalue(const MdGraph *g,
                                 const char *vertex,
                                 double tol,
                                 double *value,
                                 double *error_estimate);

/**
 * Full analysis report as JSON; free with [`md_string_free`]. Spectral
 * non-convergence is reported inside the JSON, not as a status.
 *
 * # Safety
 * `g` must be a live handle; `out` writable.
 */
MdStatus md_analyze_json(const MdGraph *g,
                         double tol,
                         uint64_t mc_samples,
                         uint64_t seed,
                         char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEANDIST_H */
