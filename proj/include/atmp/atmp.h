#ifndef ATMP_H
#define ATMP_H

/* C interface to the adversarial-training mixed-perturbation lab.
 *
 * All entry points return an atmp_status; on failure atmp_last_error() holds
 * a description for the calling thread. Handles are opaque; every *_create /
 * *_parse / *_load / *_command success transfers ownership to the caller,
 * released with the matching *_free. Config handles are not thread-safe;
 * distinct handles may be used from distinct threads freely.
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ATMP_API __declspec(dllexport)
#else
#define ATMP_API __attribute__((visibility("default")))
#endif

typedef enum atmp_status {
    ATMP_OK = 0,
    ATMP_ERROR = 1,         /* unexpected internal failure */
    ATMP_CONFIG_ERROR = 2,  /* invalid configuration or arguments */
    ATMP_NUMERIC_ERROR = 3, /* non-finite value detected */
    ATMP_IO_ERROR = 4       /* file system failure */
} atmp_status;

typedef struct atmp_config atmp_config;
typedef struct atmp_run atmp_run;

/* Message describing the calling thread's most recent failure; "" if none. */
ATMP_API const char* atmp_last_error(void);

/* Configs hold flat "key = value" entries (lines; '#' comments). */
ATMP_API atmp_status atmp_config_create(atmp_config** out);
ATMP_API atmp_status atmp_config_parse(const char* text, atmp_config** out);
ATMP_API atmp_status atmp_config_load(const char* path, atmp_config** out);
ATMP_API atmp_status atmp_config_set(atmp_config* cfg, const char* key, const char* value);
/* Canonical serialized form; the pointer stays valid until the next call
 * touching this config, or atmp_config_free. */
ATMP_API const char* atmp_config_serialize(atmp_config* cfg);
ATMP_API void atmp_config_free(atmp_config* cfg);

/* Executes one command: train, evaluate, attack, landscape, stability,
 * smoothness or suite. Unknown config keys are rejected. Returns ATMP_OK
 * whenever a result was produced; suites with failing members still produce
 * a result and report the failure through atmp_run_exit_code. */
ATMP_API atmp_status atmp_run_command(const atmp_config* cfg, const char* command,
                                      atmp_run** out);

/* 0 success, 2 config error, 3 numeric failure, 4 I/O error. */
ATMP_API int atmp_run_exit_code(const atmp_run* run);
ATMP_API const char* atmp_run_dir(const atmp_run* run);
/* Contents of the run's summary.txt. */
ATMP_API const char* atmp_run_summary(const atmp_run* run);
ATMP_API size_t atmp_run_metric_count(const atmp_run* run);
/* Metric names are sorted and stable for a given config. */
ATMP_API const char* atmp_run_metric_name(const atmp_run* run, size_t index);
ATMP_API atmp_status atmp_run_metric_value(const atmp_run* run, const char* name, double* out);
ATMP_API size_t atmp_run_artifact_count(const atmp_run* run);
ATMP_API const char* atmp_run_artifact_path(const atmp_run* run, size_t index);
/* Measured duration; reported here only, never written into artifacts. */
ATMP_API double atmp_run_wall_seconds(const atmp_run* run);
ATMP_API void atmp_run_free(atmp_run* run);

#ifdef __cplusplus
}
#endif

#endif /* ATMP_H */
