#include "scalimit.h"

#include <cstring>
#include <span>
#include <string>

#include "core/bd_simulator.hpp"
#include "core/errors.hpp"
#include "core/experiments.hpp"
#include "core/feller.hpp"
#include "core/model.hpp"
#include "core/stats.hpp"

using namespace scalimit;

struct scalimit_model {
    PopulationModel model;
};
struct scalimit_config {
    ExperimentConfig config;
};
struct scalimit_path {
    JumpPath path;
};

namespace {

thread_local std::string g_last_error;

scalimit_status fail(scalimit_status code, const char* what) {
    g_last_error = what ? what : "";
    return code;
}

// Exceptions cross the C boundary as status codes.
template <typename Fn>
scalimit_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return SCALIMIT_OK;
    } catch (const config_error& e) {
        return fail(SCALIMIT_ERR_CONFIG, e.what());
    } catch (const admissibility_error& e) {
        return fail(SCALIMIT_ERR_ADMISSIBILITY, e.what());
    } catch (const coupling_error& e) {
        return fail(SCALIMIT_ERR_COUPLING, e.what());
    } catch (const contraction_error& e) {
        return fail(SCALIMIT_ERR_CONTRACTION, e.what());
    } catch (const resource_error& e) {
        return fail(SCALIMIT_ERR_RESOURCE, e.what());
    } catch (const numeric_error& e) {
        return fail(SCALIMIT_ERR_NUMERIC, e.what());
    } catch (const domain_error& e) {
        return fail(SCALIMIT_ERR_DOMAIN, e.what());
    } catch (const std::exception& e) {
        return fail(SCALIMIT_ERR_UNKNOWN, e.what());
    } catch (...) {
        return fail(SCALIMIT_ERR_UNKNOWN, "unknown error");
    }
}

}  // namespace

extern "C" {

const char* scalimit_version(void) { return "scalimit 1.0.0"; }

const char* scalimit_last_error(void) { return g_last_error.c_str(); }

size_t scalimit_experiment_count(void) { return experiment_names().size(); }

const char* scalimit_experiment_name(size_t index) {
    const auto& names = experiment_names();
    return index < names.size() ? names[index].c_str() : nullptr;
}

scalimit_status scalimit_config_parse(const char* json_text, scalimit_config** out) {
    if (!json_text || !out) return fail(SCALIMIT_ERR_INVALID_ARG, "null argument");
    return guarded([&] { *out = new scalimit_config{parse_config(json_text)}; });
}

scalimit_status scalimit_config_parse_file(const char* path, scalimit_config** out) {
    if (!path || !out) return fail(SCALIMIT_ERR_INVALID_ARG, "null argument");
    return guarded([&] { *out = new scalimit_config{parse_config_file(path)}; });
}

scalimit_status scalimit_config_set_seed(scalimit_config* config, uint64_t seed) {
    if (!config) return fail(SCALIMIT_ERR_INVALID_ARG, "null config");
    config->config.seed = seed;
    return SCALIMIT_OK;
}

scalimit_status scalimit_config_set_output_dir(scalimit_config* config, const char* dir) {
    if (!config || !dir) return fail(SCALIMIT_ERR_INVALID_ARG, "null argument");
    config->config.output_dir = dir;
    return SCALIMIT_OK;
}

scalimit_status scalimit_run(const scalimit_config* config) {
    if (!config) return fail(SCALIMIT_ERR_INVALID_ARG, "null config");
    return guarded([&] { run_experiment(config->config); });
}

void scalimit_config_free(scalimit_config* config) { delete config; }

scalimit_status scalimit_model_linear(double nu, double mu, double sigma2, scalimit_model** out) {
    if (!out) return fail(SCALIMIT_ERR_INVALID_ARG, "null out");
    return guarded([&] { *out = new scalimit_model{PopulationModel::linear(nu, mu, sigma2)}; });
}

void scalimit_model_free(scalimit_model* model) { delete model; }

scalimit_status scalimit_birth_intensity(const scalimit_model* model, double K, double x,
                                         double* out) {
    if (!model || !out) return fail(SCALIMIT_ERR_INVALID_ARG, "null argument");
    return guarded([&] { *out = birth_intensity(model->model, K, x); });
}

scalimit_status scalimit_death_intensity(const scalimit_model* model, double K, double x,
                                         double* out) {
    if (!model || !out) return fail(SCALIMIT_ERR_INVALID_ARG, "null argument");
    return guarded([&] { *out = death_intensity(model->model, K, x); });
}

scalimit_status scalimit_net_drift(const scalimit_model* model, double x, double* out) {
    if (!model || !out) return fail(SCALIMIT_ERR_INVALID_ARG, "null argument");
    return guarded([&] { *out = net_drift(model->model, x); });
}

scalimit_status scalimit_simulate_path(const scalimit_model* model, double K, double x0, double T,
                                       uint64_t seed, scalimit_path** out) {
    if (!model || !out) return fail(SCALIMIT_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        ScalingContext ctx(K, x0, T);
        *out = new scalimit_path{simulate_path(model->model, ctx, seed)};
    });
}

size_t scalimit_path_event_count(const scalimit_path* path) {
    return path ? path->path.events.size() : 0;
}

long long scalimit_path_initial_count(const scalimit_path* path) {
    return path ? path->path.initial_count : 0;
}

scalimit_status scalimit_path_event(const scalimit_path* path, size_t index, double* t, int* kind,
                                    long long* count_after) {
    if (!path || !t || !kind || !count_after)
        return fail(SCALIMIT_ERR_INVALID_ARG, "null argument");
    if (index >= path->path.events.size())
        return fail(SCALIMIT_ERR_INVALID_ARG, "event index out of range");
    const auto& e = path->path.events[index];
    *t = e.t;
    *kind = e.kind == EventKind::Birth ? 0 : 1;
    *count_after = path->path.count_after(index + 1);
    return SCALIMIT_OK;
}

void scalimit_path_free(scalimit_path* path) { delete path; }

scalimit_status scalimit_exact_feller_sample(double drift_slope, double sigma2, double x0,
                                             double t, uint64_t seed, double* out) {
    if (!out) return fail(SCALIMIT_ERR_INVALID_ARG, "null out");
    return guarded([&] { *out = exact_feller_sample(drift_slope, sigma2, x0, t, seed); });
}

scalimit_status scalimit_ks_statistic(const double* a, size_t na, const double* b, size_t nb,
                                      double* out) {
    if (!a || !b || !out) return fail(SCALIMIT_ERR_INVALID_ARG, "null argument");
    return guarded([&] { *out = ks_statistic(std::span(a, na), std::span(b, nb)); });
}

scalimit_status scalimit_wasserstein1(const double* a, size_t na, const double* b, size_t nb,
                                      double* out) {
    if (!a || !b || !out) return fail(SCALIMIT_ERR_INVALID_ARG, "null argument");
    return guarded([&] { *out = wasserstein1(std::span(a, na), std::span(b, nb)); });
}

}  // extern "C"
