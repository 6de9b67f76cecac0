#ifndef ADAPTIVE_TDVP_H
#define ADAPTIVE_TDVP_H

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>
/* Energies in units of omega_c, times in 1/omega_c. */

// Result codes shared by all entry points.
typedef enum AtdvpStatus {
  ATDVP_STATUS_OK = 0,
  ATDVP_STATUS_NULL_POINTER = 1,
  ATDVP_STATUS_INVALID_UTF8 = 2,
  ATDVP_STATUS_CONFIG = 3,
  ATDVP_STATUS_ENGINE = 4,
  ATDVP_STATUS_IO = 5,
  ATDVP_STATUS_BUFFER_TOO_SMALL = 6,
  ATDVP_STATUS_PANIC = 7,
} AtdvpStatus;

// Opaque simulation handle.
typedef struct AtdvpSimulation AtdvpSimulation;

// Spin observables and junction fluxes at one instant.
typedef struct AtdvpObservables {
  double time;
  double sz;
  double sx;
  double sy;
  double flux_a;
  double flux_b;
  double energy;
  double norm;
} AtdvpObservables;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if it succeeded.
//
// The pointer stays valid until the next call into this library on the same thread.
const char *atdvp_last_error_message(void);

// Library version as a static nul-terminated string.
const char *atdvp_version(void);

// Parses `config_text` (key=value lines) and builds a simulation at `t = 0`.
//
// # Safety
// `config_text` must be a nul-terminated string and `out` a valid pointer to
// writable storage for one handle.
enum AtdvpStatus atdvp_simulation_new(const char *config_text, struct AtdvpSimulation **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `sim` must be null or a handle from [`atdvp_simulation_new`] not yet freed.
void atdvp_simulation_free(struct AtdvpSimulation *sim);

// Advances by up to `steps` time steps, stopping early at `t_max`.
//
// `done` (optional) receives the number of steps actually taken.
//
// # Safety
// `sim` must be a live handle; `done` must be null or writable.
enum AtdvpStatus atdvp_simulation_step(struct AtdvpSimulation *sim,
                                       uintptr_t steps,
                                       uintptr_t *done);

// Current simulation time.
//
// # Safety
// `sim` must be a live handle and `time` writable.
enum AtdvpStatus atdvp_simulation_time(const struct AtdvpSimulation *sim, double *time);

// Whether the configured `t_max` has been reached.
//
// # Safety
// `sim` must be a live handle and `finished` writable.
enum AtdvpStatus atdvp_simulation_is_finished(const struct AtdvpSimulation *sim, bool *finished);

// Measures the current state.
//
// # Safety
// `sim` must be a live handle and `out` writable.
enum AtdvpStatus atdvp_simulation_observables(const struct AtdvpSimulation *sim,
                                              struct AtdvpObservables *out);

// Copies the internal bond dimensions `D_1 … D_{N−1}` into `buf`.
//
// `len` always receives the number of bonds. Pass a null `buf` to query it;
// a buffer shorter than that fails with `BUFFER_TOO_SMALL`.
//
// # Safety
// `sim` must be a live handle, `len` writable and `buf` null or valid for
// `capacity` writes.
enum AtdvpStatus atdvp_simulation_bond_dims(const struct AtdvpSimulation *sim,
                                            uintptr_t *buf,
                                            uintptr_t capacity,
                                            uintptr_t *len);

// Runs a full simulation and writes its output files into `output_dir` of the config.
//
// # Safety
// `config_text` must be a nul-terminated string.
enum AtdvpStatus atdvp_run(const char *config_text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADAPTIVE_TDVP_H */
