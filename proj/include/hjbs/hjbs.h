/* C interface to the hjbs library. All handles are opaque; every fallible
 * call returns an hjbs_status and leaves a message in hjbs_last_error(),
 * which is thread local. Strings returned through char** are owned by the
 * caller and released with hjbs_string_free. */
#ifndef HJBS_H
#define HJBS_H

#include <stddef.h>
#include <stdint.h>

#if defined(HJBS_BUILDING_LIBRARY)
#define HJBS_API __attribute__((visibility("default")))
#else
#define HJBS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hjbs_status {
    HJBS_OK = 0,
    HJBS_ERR_CONFIG = 1,
    HJBS_ERR_IO = 2,
    HJBS_ERR_INVALID_EXPONENTS = 3,
    HJBS_ERR_DEGENERATE_NOISE = 4,
    HJBS_ERR_NEGATIVE_TIME = 5,
    HJBS_ERR_DIMENSION_MISMATCH = 6,
    HJBS_ERR_RANGE_VIOLATION = 7,
    HJBS_ERR_DEGENERATE_PENCIL = 8,
    HJBS_ERR_BAD_WEIGHT = 9,
    HJBS_ERR_NON_FINITE_INTEGRAND = 10,
    HJBS_ERR_CONTROL_OUT_OF_SET = 11,
    HJBS_ERR_BAD_EXPONENT = 12,
    HJBS_ERR_NO_THRESHOLD = 13,
    HJBS_ERR_NOT_CONTRACTED = 14,
    HJBS_ERR_THRESHOLD_GUARD = 15,
    HJBS_ERR_UNSTABLE_STEP = 16,
    HJBS_ERR_INVALID_ARGUMENT = 17,
    HJBS_ERR_INTERNAL = 99
} hjbs_status;

typedef struct hjbs_config hjbs_config;
typedef struct hjbs_model hjbs_model;
typedef struct hjbs_solution hjbs_solution;

HJBS_API const char* hjbs_version(void);
HJBS_API const char* hjbs_last_error(void);
HJBS_API const char* hjbs_status_name(hjbs_status status);
HJBS_API void hjbs_string_free(char* s);

HJBS_API hjbs_status hjbs_config_load_file(const char* path, hjbs_config** out);
HJBS_API hjbs_status hjbs_config_load_string(const char* toml, hjbs_config** out);
HJBS_API void hjbs_config_free(hjbs_config* config);
/* Hex SHA-256 of the canonical JSON form; stable under key reordering. */
HJBS_API hjbs_status hjbs_config_digest(const hjbs_config* config, char** hex);
HJBS_API uint64_t hjbs_config_seed(const hjbs_config* config);
HJBS_API void hjbs_config_set_seed(hjbs_config* config, uint64_t seed);
/* Overrides the estimate window; samples = 0 keeps the configured count. */
HJBS_API hjbs_status hjbs_config_set_estimates_window(hjbs_config* config, double t_min,
                                                      double t_max, size_t samples);

HJBS_API hjbs_status hjbs_model_create(const hjbs_config* config, hjbs_model** out);
HJBS_API void hjbs_model_free(hjbs_model* model);
HJBS_API hjbs_status hjbs_model_dims(const hjbs_model* model, size_t* state_dim, size_t* dim_p,
                                     size_t* dim_k);
/* out = e^{tA} x, both of length state_dim. */
HJBS_API hjbs_status hjbs_semigroup_apply(const hjbs_model* model, double t, const double* x,
                                          double* out);
HJBS_API hjbs_status hjbs_lambda_norm(const hjbs_model* model, double t, double* out);
HJBS_API hjbs_status hjbs_duality_constant(const hjbs_model* model, double t, double* out);

/* CSV table and JSON summary of the smoothing estimates. */
HJBS_API hjbs_status hjbs_run_estimates(const hjbs_config* config, char** csv, char** json);

/* lambda_override may be NULL. lambda0_out (may be NULL) receives the
 * certified threshold even when the call fails with HJBS_ERR_THRESHOLD_GUARD. */
HJBS_API hjbs_status hjbs_solve(const hjbs_config* config, const double* lambda_override,
                                unsigned threads, hjbs_solution** out, double* lambda0_out);
HJBS_API void hjbs_solution_free(hjbs_solution* solution);
HJBS_API hjbs_status hjbs_solution_to_json(const hjbs_solution* solution, char** json);
HJBS_API hjbs_status hjbs_solution_from_json(const char* json, hjbs_solution** out);
HJBS_API hjbs_status hjbs_solution_residual_csv(const hjbs_solution* solution, char** csv);
HJBS_API hjbs_status hjbs_solution_value(const hjbs_solution* solution, const double* z, size_t n,
                                         double* value);
HJBS_API hjbs_status hjbs_solution_lambda(const hjbs_solution* solution, double* lambda);
HJBS_API hjbs_status hjbs_solution_converged(const hjbs_solution* solution, int* converged);

/* paths = 0 uses the configured count. trajectories_csv may be NULL. */
HJBS_API hjbs_status hjbs_simulate(const hjbs_config* config, const hjbs_solution* solution,
                                   unsigned threads, size_t paths, char** json,
                                   char** trajectories_csv);
HJBS_API hjbs_status hjbs_verify(const hjbs_config* config, const hjbs_solution* solution,
                                 unsigned threads, size_t paths, char** json, int* passed);

#ifdef __cplusplus
}
#endif

#endif /* HJBS_H */
