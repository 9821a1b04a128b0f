/* Copyright 2026 recip contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C API for the recip survival-analysis pipeline. All functions are
 * thread-compatible: distinct configs may be used from distinct threads, but
 * a single recip_config must not be shared without external locking.
 */
#ifndef RECIP_H
#define RECIP_H

#include <stdint.h>

#if defined _WIN32 || defined __CYGWIN__
#ifdef BUILDING_RECIP
#define RECIP_API __declspec(dllexport)
#else
#define RECIP_API __declspec(dllimport)
#endif
#else
#ifdef BUILDING_RECIP
#define RECIP_API __attribute__((visibility("default")))
#else
#define RECIP_API
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum recip_status {
  RECIP_OK = 0,
  RECIP_E_INVALID_ARGUMENT = 1,
  RECIP_E_MISSING_INPUT = 2,
  RECIP_E_PARSE = 3,
  RECIP_E_IO = 4,
  RECIP_E_NUMERIC = 5,
  RECIP_E_INTERNAL = 6
} recip_status;

/* Opaque configuration handle. */
typedef struct recip_config recip_config;

/* Library version, e.g. "0.1.0". Static storage; do not free. */
RECIP_API const char* recip_version(void);

/* Short name for a status code, e.g. "missing_input". Static storage. */
RECIP_API const char* recip_status_name(recip_status status);

/* Message from the most recent failing call on this thread ("" if none).
 * Static thread-local storage; valid until the next failing call. */
RECIP_API const char* recip_last_error(void);

/* Creates a config with built-in defaults. Free with recip_config_free. */
RECIP_API recip_config* recip_config_new(void);
RECIP_API void recip_config_free(recip_config* cfg);

/* Applies `key = value` lines from a file on top of the current values. */
RECIP_API recip_status recip_config_load_file(recip_config* cfg, const char* path);

/* Sets one key. Unknown keys and malformed values are rejected. */
RECIP_API recip_status recip_config_set(recip_config* cfg, const char* key,
                                        const char* value);

/* Returns the current value of a key, or NULL if the key is unknown.
 * The pointer is invalidated by the next set/load/free on this config. */
RECIP_API const char* recip_config_get(const recip_config* cfg, const char* key);

/* Runs one pipeline stage ("simulate", "ingest", "windows", "match", "fit",
 * "sweep", "bins", "report", or "all"). Artifacts land in the configured
 * output directory. If `summary_json` is non-NULL it receives a heap-allocated
 * JSON object describing the run (stage, counts, outputs); release it with
 * recip_string_free. */
RECIP_API recip_status recip_run_stage(recip_config* cfg, const char* stage,
                                       char** summary_json);

/* Newline-separated stage names in execution order. Static storage. */
RECIP_API const char* recip_stage_names(void);

RECIP_API void recip_string_free(char* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RECIP_H */
