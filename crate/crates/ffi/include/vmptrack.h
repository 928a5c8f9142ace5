#ifndef VMPTRACK_H
#define VMPTRACK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VmpStatus {
  VMP_STATUS_OK = 0,
  VMP_STATUS_NULL_POINTER = 1,
  VMP_STATUS_INVALID_ARGUMENT = 2,
  VMP_STATUS_CONFIG = 3,
  VMP_STATUS_NUMERICAL = 4,
  VMP_STATUS_IO = 5,
  VMP_STATUS_BUFFER_TOO_SMALL = 6,
  VMP_STATUS_PANIC = 7,
} VmpStatus;

typedef struct VmpSimulator VmpSimulator;

typedef struct VmpTracker VmpTracker;

/**
 * A reported object: state `[x, y, vx, vy]` and existence probability.
 */
typedef struct VmpEstimate {
  uint64_t track_id;
  double state[4];
  double existence;
} VmpEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the calling thread's last error, or null. Valid until the next
 * failing call on the same thread.
 */
const char *vmp_last_error_message(void);

/**
 * Creates a tracker. Both arguments are optional JSON documents (radar and
 * tracker configuration); null selects the defaults.
 *
 * # Safety
 * The strings must be null or valid NUL-terminated; `out` must be writable.
 */
enum VmpStatus vmp_tracker_new(const char *radar_json,
                               const char *tracker_json,
                               struct VmpTracker **out);

/**
 * # Safety
 * `tracker` must be null or a handle from [`vmp_tracker_new`] not yet freed.
 */
void vmp_tracker_free(struct VmpTracker *tracker);

/**
 * Number of complex samples per snapshot.
 *
 * # Safety
 * `tracker` must be a live handle; `out` must be writable.
 */
enum VmpStatus vmp_tracker_snapshot_len(const struct VmpTracker *tracker, size_t *out);

/**
 * Processes the snapshot of `step` (`len` complex samples as `2 * len`
 * doubles) and writes up to `capacity` estimates. `written` receives the
 * number of reported objects even when the buffer is too small.
 *
 * # Safety
 * `data` must hold `2 * len` doubles, `estimates` `capacity` entries (may be
 * null if `capacity` is 0), and `written` must be writable.
 */
enum VmpStatus vmp_tracker_step(struct VmpTracker *tracker,
                                size_t step,
                                const double *data,
                                size_t len,
                                struct VmpEstimate *estimates,
                                size_t capacity,
                                size_t *written);

/**
 * Serializes every track history as JSON. Release with [`vmp_string_free`].
 *
 * # Safety
 * `tracker` must be a live handle; `out` must be writable.
 */
enum VmpStatus vmp_tracker_checkpoint_json(const struct VmpTracker *tracker, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void vmp_string_free(char *s);

/**
 * Creates a simulator for a scenario JSON document; null selects the
 * built-in three-track scene.
 *
 * # Safety
 * `scenario_json` must be null or NUL-terminated; `out` must be writable.
 */
enum VmpStatus vmp_simulator_new(const char *scenario_json, struct VmpSimulator **out);

/**
 * # Safety
 * `sim` must be null or a handle from [`vmp_simulator_new`] not yet freed.
 */
void vmp_simulator_free(struct VmpSimulator *sim);

/**
 * First step index and number of steps of the scenario.
 *
 * # Safety
 * `sim` must be a live handle; the outputs must be writable.
 */
enum VmpStatus vmp_simulator_steps(const struct VmpSimulator *sim,
                                   size_t *first_step,
                                   size_t *num_steps);

/**
 * Simulates the snapshot of `step` for run `seed` into `out` (`2 * len`
 * doubles, `len` as reported by [`vmp_tracker_snapshot_len`] for the same
 * radar).
 *
 * # Safety
 * `sim` must be a live handle and `out` must hold `2 * len` doubles.
 */
enum VmpStatus vmp_simulator_snapshot(const struct VmpSimulator *sim,
                                      uint64_t seed,
                                      size_t step,
                                      double *out,
                                      size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VMPTRACK_H */
