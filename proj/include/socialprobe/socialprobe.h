/* Copyright 2026 The socialprobe Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the socialprobe library. Every function returns an
 * sp_status; on failure sp_last_error() describes the problem for the
 * calling thread. Handles are opaque and must be released with the matching
 * *_destroy function.
 */

#ifndef SOCIALPROBE_H_
#define SOCIALPROBE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SP_API __declspec(dllexport)
#else
#define SP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sp_status {
  SP_OK = 0,
  SP_ERR_INVALID_ARGUMENT = 1,
  SP_ERR_CONFIG = 2,
  SP_ERR_IO = 3,
  SP_ERR_PARSE = 4,
  SP_ERR_SHAPE = 5,
  SP_ERR_NUMERIC = 6,
  SP_ERR_RUN_FAILED = 7,
  SP_ERR_INTERNAL = 99
} sp_status;

typedef struct sp_config sp_config;
typedef struct sp_scene sp_scene;

/* Message for the last failing call on this thread; "" if none. */
SP_API const char* sp_last_error(void);
SP_API const char* sp_version(void);

/* Experiment configuration. Keys mirror the JSON config file: model(s),
 * protocol, scene(s), seeds, data_dir, out_dir, epochs, lr, batch, lambda,
 * val_fraction, augment, jobs. Values are strings ("0..4", "all", "0.001"). */
SP_API sp_status sp_config_create(sp_config** out);
SP_API sp_status sp_config_set(sp_config* cfg, const char* key, const char* value);
SP_API sp_status sp_config_load_json(sp_config* cfg, const char* path);
/* Writes the JSON form into buf (NUL-terminated); *needed receives the full
 * length including the terminator, so a NULL buf can size the buffer. */
SP_API sp_status sp_config_to_json(const sp_config* cfg, char* buf, size_t size, size_t* needed);
SP_API void sp_config_destroy(sp_config* cfg);

/* Runs the benchmark matrix and writes artifacts to out_dir. Returns
 * SP_ERR_RUN_FAILED if any run failed (artifacts are still written). */
SP_API sp_status sp_run(const sp_config* cfg, int verbose);
/* Regenerates reports and plot files from out_dir/runs. */
SP_API sp_status sp_report(const char* out_dir);
/* Gradient, attention, gate and metric checks; *passed receives 1 or 0. */
SP_API sp_status sp_selftest(uint64_t seed, int verbose, int* passed);

SP_API sp_status sp_scene_load(const char* path, sp_scene** out);
SP_API sp_status sp_scene_counts(const sp_scene* scene, size_t* pedestrians, size_t* records,
                                 size_t* windows);
SP_API void sp_scene_destroy(sp_scene* scene);

/* xy arrays hold n interleaved (x, y) pairs. */
SP_API sp_status sp_ade(const double* predicted_xy, const double* truth_xy, size_t n, double* out);
SP_API sp_status sp_fde(const double* predicted_xy, const double* truth_xy, size_t n, double* out);

SP_API sp_status sp_gate_prob_nonzero(double log_alpha, double* out);
SP_API sp_status sp_gate_deterministic(double log_alpha, double* out);

#ifdef __cplusplus
}
#endif

#endif /* SOCIALPROBE_H_ */
