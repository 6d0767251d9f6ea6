#ifndef GHZ_REPEATER_H
#define GHZ_REPEATER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every entry point.
typedef enum GrStatus {
  GR_STATUS_OK = 0,
  GR_STATUS_INVALID_ARGUMENT = 1,
  GR_STATUS_NULL_POINTER = 2,
  GR_STATUS_INSUFFICIENT_STATISTICS = 3,
  GR_STATUS_NO_POSITIVE_YIELD = 4,
  GR_STATUS_UNSUPPORTED = 5,
  GR_STATUS_IO = 6,
  GR_STATUS_PARSE = 7,
  GR_STATUS_PANIC = 8,
} GrStatus;

// Channel and detector parameters.
typedef struct GrChannel GrChannel;

// Result of a yield sweep.
typedef struct GrSweep GrSweep;

// One point of a yield curve.
typedef struct GrYieldPoint {
  double l_km;
  size_t n_users;
  double q;
  double e_b_max;
  double e_p;
  double yield_;
} GrYieldPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread. The pointer stays valid
// until the next failing call on the same thread.
const char *gr_last_error_message(void);

// Creates a channel from a built-in preset ("paper-2022" or "ideal").
//
// # Safety
// `name` must be a NUL-terminated string and `out` a writable pointer.
enum GrStatus gr_channel_new_preset(const char *name, struct GrChannel **out);

// Releases a channel. Null is ignored.
//
// # Safety
// `channel` must come from [`gr_channel_new_preset`] and not be freed twice.
void gr_channel_free(struct GrChannel *channel);

// Sets the user-to-analyzer distance in km.
//
// # Safety
// `channel` must be a live handle.
enum GrStatus gr_channel_set_distance(struct GrChannel *channel, double distance_km);

// Replaces the detector efficiency and dark-count probability.
//
// # Safety
// `channel` must be a live handle.
enum GrStatus gr_channel_set_detector(struct GrChannel *channel,
                                      double efficiency,
                                      double dark_count_prob);

// Fiber transmittance exp(-l / l_att).
//
// # Safety
// `out` must be writable.
enum GrStatus gr_fiber_transmittance(double l_km, double l_att_km, double *out);

// Overall gain of the channel for a given GHZ-projection success.
//
// # Safety
// `channel` must be a live handle and `out` writable.
enum GrStatus gr_total_gain(const struct GrChannel *channel, double q_ghz, double *out);

// Expected number of complete groups for n users, m slots each, survival eta.
//
// # Safety
// `out` must be writable.
enum GrStatus gr_expected_groups_exact(size_t n_users, uint64_t m, double eta, double *out);

// Classifies a click pattern of an n-port analyzer. Each entry of
// `detectors` is `2 * port + pol` with pol 0 for H and 1 for V. Writes +1
// for Phi+, -1 for Phi-, 0 for a failed projection.
//
// # Safety
// `detectors` must point to `len` values and `out` be writable.
enum GrStatus gr_classify_clicks(size_t n, const uint32_t *detectors, size_t len, int32_t *out);

// Analytic yield at the channel's current distance.
//
// # Safety
// `channel` must be a live handle and `out` writable.
enum GrStatus gr_yield_analytic(const struct GrChannel *channel,
                                size_t n_users,
                                struct GrYieldPoint *out);

// Distance where the analytic yield drops to zero, to within `tol_km`.
// Writes +infinity when the yield never vanishes.
//
// # Safety
// `channel` must be a live handle and `out` writable.
enum GrStatus gr_cutoff_distance(const struct GrChannel *channel,
                                 size_t n_users,
                                 double tol_km,
                                 double *out);

// Analytic sweep over user counts and an ascending distance grid, ordered
// by user count, then distance.
//
// # Safety
// The arrays must hold the stated number of elements, `channel` must be a
// live handle and `out` writable.
enum GrStatus gr_sweep_analytic(const struct GrChannel *channel,
                                const size_t *n_users,
                                size_t n_users_len,
                                const double *distances_km,
                                size_t distances_len,
                                struct GrSweep **out);

// Number of points in a sweep.
//
// # Safety
// `sweep` must be a live handle and `out` writable.
enum GrStatus gr_sweep_len(const struct GrSweep *sweep, size_t *out);

// Copies point `index` of a sweep.
//
// # Safety
// `sweep` must be a live handle and `out` writable.
enum GrStatus gr_sweep_get(const struct GrSweep *sweep, size_t index, struct GrYieldPoint *out);

// Writes a sweep as CSV (same layout as the command-line tool).
//
// # Safety
// `sweep` must be a live handle and `path` a NUL-terminated string.
enum GrStatus gr_sweep_write_csv(const struct GrSweep *sweep, const char *path);

// Releases a sweep. Null is ignored.
//
// # Safety
// `sweep` must come from [`gr_sweep_analytic`] and not be freed twice.
void gr_sweep_free(struct GrSweep *sweep);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GHZ_REPEATER_H */
