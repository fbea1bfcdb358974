#ifndef FBCSF_H
#define FBCSF_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum FbcsfStatus {
  FBCSF_STATUS_OK = 0,
  FBCSF_STATUS_NULL_POINTER = 1,
  FBCSF_STATUS_INVALID_ARGUMENT = 2,
  FBCSF_STATUS_DOMAIN = 3,
  FBCSF_STATUS_GEOMETRY = 4,
  FBCSF_STATUS_NUMERIC = 5,
  FBCSF_STATUS_PRECONDITION = 6,
  FBCSF_STATUS_CONFIG = 7,
  FBCSF_STATUS_CERTIFICATE = 8,
  FBCSF_STATUS_IO = 9,
  FBCSF_STATUS_PANIC = 10,
  /**
   * A caller buffer is too small; the message states the needed size.
   */
  FBCSF_STATUS_BUFFER_TOO_SMALL = 11,
} FbcsfStatus;

/**
 * How a flow run ended.
 */
typedef enum FbcsfOutcome {
  FBCSF_OUTCOME_GEODESIC = 0,
  FBCSF_OUTCOME_HALF_POINT = 1,
  FBCSF_OUTCOME_TIMEOUT = 2,
} FbcsfOutcome;

/**
 * Opaque chord handle.
 */
typedef struct FbcsfChord FbcsfChord;

/**
 * Opaque surface handle.
 */
typedef struct FbcsfSurface FbcsfSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fbcsf_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length in
 * bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t fbcsf_last_error(char *buf, size_t len);

/**
 * Builds a named surface preset. Non-positive `a` or `b` select the
 * preset's default semi-axes.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FbcsfStatus fbcsf_surface_preset(const char *name,
                                      double a,
                                      double b,
                                      struct FbcsfSurface **out);

/**
 * # Safety
 * `surface` must be null or a handle from this library, freed once.
 */
void fbcsf_surface_free(struct FbcsfSurface *surface);

/**
 * Gaussian curvature at the chart point `(x, y)`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FbcsfStatus fbcsf_surface_gaussian_curvature(const struct FbcsfSurface *surface,
                                                  double x,
                                                  double y,
                                                  double *out);

/**
 * The chart line `{u · (cos θ, sin θ) = offset}` with `segments + 1` samples.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FbcsfStatus fbcsf_chord_line(const struct FbcsfSurface *surface,
                                  double normal_angle,
                                  double offset,
                                  size_t segments,
                                  struct FbcsfChord **out);

/**
 * A chord through `count` chart points; the first and last must lie on
 * the boundary.
 *
 * # Safety
 * `xs` and `ys` must be valid for `count` reads; other pointers valid.
 */
enum FbcsfStatus fbcsf_chord_from_points(const struct FbcsfSurface *surface,
                                         const double *xs,
                                         const double *ys,
                                         size_t count,
                                         struct FbcsfChord **out);

/**
 * # Safety
 * `chord` must be null or a handle from this library, freed once.
 */
void fbcsf_chord_free(struct FbcsfChord *chord);

/**
 * Metric length of the chord.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FbcsfStatus fbcsf_chord_length(const struct FbcsfChord *chord, double *out);

/**
 * Copies the chart samples into `xs` and `ys`, each of capacity `cap`.
 * `count` receives the number of samples; if it exceeds `cap` nothing is
 * copied and `BufferTooSmall` is returned.
 *
 * # Safety
 * `xs` and `ys` must be valid for `cap` writes; other pointers valid.
 */
enum FbcsfStatus fbcsf_chord_samples(const struct FbcsfChord *chord,
                                     double *xs,
                                     double *ys,
                                     size_t cap,
                                     size_t *count);

/**
 * The `k` lowest Robin eigenvalues of the stability operator of a free
 * boundary geodesic, with its Morse index and nullity.
 *
 * # Safety
 * `eigenvalues` must be valid for `k` writes; other pointers valid.
 */
enum FbcsfStatus fbcsf_robin_spectrum(const struct FbcsfSurface *surface,
                                      const struct FbcsfChord *geodesic,
                                      size_t k,
                                      double *eigenvalues,
                                      size_t *index,
                                      size_t *nullity);

/**
 * Flows `chord` until it converges to a geodesic, shrinks to a boundary
 * point or reaches `t_max`. `final_length` receives the length of the last
 * snapshot. When `geodesic` is not null and the run converged it receives
 * a new chord handle, otherwise null.
 *
 * # Safety
 * `surface`, `chord`, `outcome` and `final_length` must be valid;
 * `geodesic` may be null.
 */
enum FbcsfStatus fbcsf_flow(const struct FbcsfSurface *surface,
                            const struct FbcsfChord *chord,
                            double t_max,
                            size_t segments,
                            enum FbcsfOutcome *outcome,
                            double *final_length,
                            struct FbcsfChord **geodesic);

/**
 * Runs an experiment described by a TOML config, writing artifacts to its
 * output directory. `exit_code` receives the command line exit code (0
 * ok, 3 audit violation); errors are returned as a status.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `exit_code` valid.
 */
enum FbcsfStatus fbcsf_run_config(const char *config, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FBCSF_H */
