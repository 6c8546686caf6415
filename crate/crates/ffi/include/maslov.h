#ifndef MASLOV_H
#define MASLOV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MaslovStatus {
  MASLOV_STATUS_OK = 0,
  MASLOV_STATUS_NULL_POINTER = 1,
  MASLOV_STATUS_INVALID_UTF8 = 2,
  // Malformed JSON or an invalid model, mesh or scenario description.
  MASLOV_STATUS_INVALID_INPUT = 3,
  // A point left the chart or the surface is not Lagrangian.
  MASLOV_STATUS_GEOMETRY = 4,
  // The mesh is too coarse for the requested quantity.
  MASLOV_STATUS_RESOLUTION = 5,
  // A period sits too close to a half-integer for its integer part to be trusted.
  MASLOV_STATUS_HALF_INTEGER_BOUNDARY = 6,
  MASLOV_STATUS_NUMERICAL = 7,
  MASLOV_STATUS_NOT_APPLICABLE = 8,
  MASLOV_STATUS_BUFFER_TOO_SMALL = 9,
  MASLOV_STATUS_IO = 10,
  MASLOV_STATUS_PANIC = 11,
} MaslovStatus;

// Discrete Lagrangian loop or torus.
typedef struct MaslovMesh MaslovMesh;

// Ambient Kahler model.
typedef struct MaslovModel MaslovModel;

// Phase decomposition of a mesh.
typedef struct MaslovReport MaslovReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *maslov_last_error(void);

// # Safety
// `s` must come from this library and not have been freed.
void maslov_string_free(char *s);

// Parse a model such as `{"kind":"round-sphere","params":{"radius":1}}`.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum MaslovStatus maslov_model_from_json(const char *json, struct MaslovModel **out);

// # Safety
// `model` must come from this library and not have been freed.
void maslov_model_free(struct MaslovModel *model);

// Circle of radius `r` about `(cx, cy)` traversed `turns` times, with `n` vertices.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum MaslovStatus maslov_mesh_circle(const struct MaslovModel *model,
                                     double cx,
                                     double cy,
                                     double r,
                                     uint32_t turns,
                                     size_t n,
                                     struct MaslovMesh **out);

// Latitude circle at polar angle `theta` on a sphere model.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum MaslovStatus maslov_mesh_latitude(const struct MaslovModel *model,
                                       double theta,
                                       size_t n,
                                       struct MaslovMesh **out);

// Product of circles of radii `r1`, `r2` in `C^2`, on an `n1 x n2` grid.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum MaslovStatus maslov_mesh_product_torus(const struct MaslovModel *model,
                                            double r1,
                                            double r2,
                                            size_t n1,
                                            size_t n2,
                                            struct MaslovMesh **out);

// # Safety
// `json` must be a NUL-terminated mesh file; `out` must be writable.
enum MaslovStatus maslov_mesh_from_json(const char *json, struct MaslovMesh **out);

// # Safety
// `mesh` must be a live handle; the string written to `out` is freed with `maslov_string_free`.
enum MaslovStatus maslov_mesh_to_json(const struct MaslovMesh *mesh, char **out);

// Vertex count, or 0 for a null handle.
//
// # Safety
// `mesh` must be null or a live handle.
size_t maslov_mesh_num_vertices(const struct MaslovMesh *mesh);

// 1 for loops, 2 for tori, 0 for a null handle.
//
// # Safety
// `mesh` must be null or a live handle.
size_t maslov_mesh_dim(const struct MaslovMesh *mesh);

// # Safety
// `mesh` must come from this library and not have been freed.
void maslov_mesh_free(struct MaslovMesh *mesh);

// Largest per-edge gap between transport angles and the mean curvature form.
//
// # Safety
// `mesh` must be a live handle; `out` must be writable.
enum MaslovStatus maslov_mesh_connection_residual(const struct MaslovMesh *mesh, double *out);

// Phase decomposition for the `power`-th power of the determinant bundle.
//
// # Safety
// `mesh` must be a live handle; `out` must be writable.
enum MaslovStatus maslov_decompose(const struct MaslovMesh *mesh,
                                   uint32_t power,
                                   struct MaslovReport **out);

// Number of homology cycles, or 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t maslov_report_num_cycles(const struct MaslovReport *report);

// Copy the Maslov integers into `buf`, which must hold `maslov_report_num_cycles` values.
//
// # Safety
// `report` must be a live handle; `buf` must have room for `len` values.
enum MaslovStatus maslov_report_maslov(const struct MaslovReport *report, int64_t *buf, size_t len);

// Copy the connection periods (radians) into `buf`.
//
// # Safety
// `report` must be a live handle; `buf` must have room for `len` values.
enum MaslovStatus maslov_report_periods(const struct MaslovReport *report, double *buf, size_t len);

// # Safety
// `report` must be a live handle; `out` must be writable.
enum MaslovStatus maslov_report_is_special(const struct MaslovReport *report, bool *out);

// # Safety
// `report` must be a live handle; `out` must be writable.
enum MaslovStatus maslov_report_is_bohr_sommerfeld(const struct MaslovReport *report, bool *out);

// # Safety
// `report` must be a live handle; the string written to `out` is freed with `maslov_string_free`.
enum MaslovStatus maslov_report_to_json(const struct MaslovReport *report, char **out);

// # Safety
// `report` must come from this library and not have been freed.
void maslov_report_free(struct MaslovReport *report);

// Run a built-in scenario without writing files. `config_json` may be null for defaults.
// The report JSON goes to `out`; `passed` receives whether every check held.
//
// # Safety
// `name` must be a NUL-terminated string, `config_json` null or NUL-terminated, and both
// output pointers writable.
enum MaslovStatus maslov_run_scenario(const char *name,
                                      const char *config_json,
                                      char **out,
                                      bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MASLOV_H */
