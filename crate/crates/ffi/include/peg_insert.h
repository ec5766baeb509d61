#ifndef PEG_INSERT_H
#define PEG_INSERT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Length of an observation vector.
 */
#define PI_OBS_DIM 18

/**
 * Longest parameter slice of any primitive type.
 */
#define PI_MAX_PARAMS 4

typedef enum PiStatus {
  PI_STATUS_OK = 0,
  PI_STATUS_NULL_POINTER = 1,
  PI_STATUS_INVALID_UTF8 = 2,
  PI_STATUS_INVALID_ARGUMENT = 3,
  PI_STATUS_UNKNOWN_TASK = 4,
  PI_STATUS_CONFIG = 5,
  PI_STATUS_CHECKPOINT = 6,
  PI_STATUS_IO = 7,
  PI_STATUS_NON_FINITE = 8,
  PI_STATUS_PANIC = 99,
} PiStatus;

typedef enum PiPrimitive {
  PI_PRIMITIVE_TRANSLATION = 0,
  PI_PRIMITIVE_ROTATION = 1,
  PI_PRIMITIVE_INSERTION = 2,
} PiPrimitive;

typedef enum PiStopReason {
  PI_STOP_REASON_FORCE_LIMIT = 0,
  PI_STOP_REASON_DISTANCE_THRESHOLD = 1,
  PI_STOP_REASON_SUCCESS = 2,
  PI_STOP_REASON_CLAMP = 3,
} PiStopReason;

/**
 * Opaque simulator handle.
 */
typedef struct PiEnv PiEnv;

/**
 * Opaque trained-policy handle.
 */
typedef struct PiPolicy PiPolicy;

/**
 * Result of one primitive.
 */
typedef struct PiStep {
  double obs[PI_OBS_DIM];
  double reward;
  bool done;
  bool success;
  enum PiStopReason stop_reason;
  size_t substeps;
} PiStep;

/**
 * A policy's chosen primitive; `params[..num_params]` are meaningful.
 */
typedef struct PiAction {
  enum PiPrimitive kind;
  size_t num_params;
  double params[PI_MAX_PARAMS];
} PiAction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on this thread.
 */
const char *pi_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pi_version(void);

/**
 * Creates a simulator for a task preset ("square", "triangle", ...).
 *
 * # Safety
 * `task` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PiStatus pi_env_new(const char *task, struct PiEnv **out);

/**
 * Releases a simulator; null is ignored.
 *
 * # Safety
 * `env` must come from [`pi_env_new`] and not be used afterwards.
 */
void pi_env_free(struct PiEnv *env);

/**
 * Starts an episode from `seed` and writes the first observation.
 *
 * # Safety
 * `env` must be a live handle and `obs` point to `PI_OBS_DIM` doubles.
 */
enum PiStatus pi_env_reset(struct PiEnv *env, uint64_t seed, double *obs);

/**
 * Executes one primitive. `params` holds the type's slice: four values for
 * translation and rotation (velocity, then force limit), one for insertion.
 *
 * # Safety
 * `env` must be a live handle, `params` point to `num_params` doubles and
 * `out` be a valid pointer.
 */
enum PiStatus pi_env_step(struct PiEnv *env,
                          enum PiPrimitive kind,
                          const double *params,
                          size_t num_params,
                          struct PiStep *out);

/**
 * Loads a policy from a checkpoint of any of the three learners.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PiStatus pi_policy_load(const char *path, struct PiPolicy **out);

/**
 * Releases a policy; null is ignored.
 *
 * # Safety
 * `policy` must come from [`pi_policy_load`] and not be used afterwards.
 */
void pi_policy_free(struct PiPolicy *policy);

/**
 * Greedy primitive for an observation.
 *
 * # Safety
 * `policy` must be a live handle, `obs` point to `PI_OBS_DIM` doubles and
 * `out` be a valid pointer.
 */
enum PiStatus pi_policy_act(const struct PiPolicy *policy, const double *obs, struct PiAction *out);

/**
 * Trains per a TOML run configuration, writing artifacts to its `out`
 * directory. Writes the final evaluation success rate.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string and `success_rate` a
 * valid pointer.
 */
enum PiStatus pi_train(const char *config_path, double *success_rate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PEG_INSERT_H */
