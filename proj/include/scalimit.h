/* scalimit — birth/death population models, their diffusion scaling limits,
 * BSDE solvers and control-problem experiments, behind a C API.
 *
 * All functions returning scalimit_status set a thread-local message
 * retrievable with scalimit_last_error() on failure.  Objects returned
 * through out-parameters are owned by the caller and released with the
 * matching *_free function.
 */
#ifndef SCALIMIT_H
#define SCALIMIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scalimit_status {
    SCALIMIT_OK = 0,
    SCALIMIT_ERR_INVALID_ARG = 1,
    SCALIMIT_ERR_CONFIG = 2,
    SCALIMIT_ERR_NUMERIC = 3,
    SCALIMIT_ERR_DOMAIN = 4,
    SCALIMIT_ERR_RESOURCE = 5,
    SCALIMIT_ERR_ADMISSIBILITY = 6,
    SCALIMIT_ERR_COUPLING = 7,
    SCALIMIT_ERR_CONTRACTION = 8,
    SCALIMIT_ERR_IO = 9,
    SCALIMIT_ERR_UNKNOWN = 10
} scalimit_status;

typedef struct scalimit_model scalimit_model;
typedef struct scalimit_config scalimit_config;
typedef struct scalimit_path scalimit_path;

const char* scalimit_version(void);
/* Message of the most recent failure on this thread; empty string if none. */
const char* scalimit_last_error(void);

/* --- experiment registry ------------------------------------------------ */

size_t scalimit_experiment_count(void);
const char* scalimit_experiment_name(size_t index);

/* --- configuration and runner ------------------------------------------- */

scalimit_status scalimit_config_parse(const char* json_text, scalimit_config** out);
scalimit_status scalimit_config_parse_file(const char* path, scalimit_config** out);
scalimit_status scalimit_config_set_seed(scalimit_config* config, uint64_t seed);
scalimit_status scalimit_config_set_output_dir(scalimit_config* config, const char* dir);
/* Runs the experiment; artifacts land in the configured output directory. */
scalimit_status scalimit_run(const scalimit_config* config);
void scalimit_config_free(scalimit_config* config);

/* --- models and simulation ----------------------------------------------- */

scalimit_status scalimit_model_linear(double nu, double mu, double sigma2, scalimit_model** out);
void scalimit_model_free(scalimit_model* model);

scalimit_status scalimit_birth_intensity(const scalimit_model* model, double K, double x,
                                         double* out);
scalimit_status scalimit_death_intensity(const scalimit_model* model, double K, double x,
                                         double* out);
scalimit_status scalimit_net_drift(const scalimit_model* model, double x, double* out);

/* Exact Gillespie path of the rescaled chain started from round(K x0)/K. */
scalimit_status scalimit_simulate_path(const scalimit_model* model, double K, double x0, double T,
                                       uint64_t seed, scalimit_path** out);
size_t scalimit_path_event_count(const scalimit_path* path);
long long scalimit_path_initial_count(const scalimit_path* path);
/* kind: 0 birth, 1 death; count_after: population count right after the event. */
scalimit_status scalimit_path_event(const scalimit_path* path, size_t index, double* t, int* kind,
                                    long long* count_after);
void scalimit_path_free(scalimit_path* path);

/* One exact draw of the linear Feller transition dX = b X dt + sqrt(s2 X) dW. */
scalimit_status scalimit_exact_feller_sample(double drift_slope, double sigma2, double x0,
                                             double t, uint64_t seed, double* out);

/* --- statistics ----------------------------------------------------------- */

scalimit_status scalimit_ks_statistic(const double* a, size_t na, const double* b, size_t nb,
                                      double* out);
scalimit_status scalimit_wasserstein1(const double* a, size_t na, const double* b, size_t nb,
                                      double* out);

#ifdef __cplusplus
}
#endif

#endif /* SCALIMIT_H */
