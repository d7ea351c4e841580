#ifndef SCALIMIT_CORE_EXPERIMENTS_HPP
#define SCALIMIT_CORE_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace scalimit {

// One self-describing JSON document drives a run; see README for the schema.
struct ExperimentConfig {
    std::string experiment;
    double nu = 0.2, mu = 0.1, sigma2 = 0.3;
    double gamma = 1.0, x_tilde = 20.0, x0 = 50.0, T = 0.1;
    std::vector<double> K_list;
    std::size_t n_paths = 10000;
    double dt_ode = -1, dt_euler = 1e-4, dt_pde = 1e-4, dt_lattice = -1;
    std::uint64_t seed = 20250810;
    unsigned n_workers = 0;
    std::string output_dir = "out";
    double t_eval = 0.1;          // figure2
    double beta1 = 0, beta2 = 0;  // moments
    std::string verify_mode = "discrete";
    double verify_K = 16;
    bool with_bsde = true, with_mc = true;  // figure1 columns
    std::string echo;  // normalized config document (manifest payload)
};

const std::vector<std::string>& experiment_names();

// Throws config_error with the offending field path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig parse_config_file(const std::string& path);

struct RunResult {
    std::vector<std::string> artifacts;  // file names relative to output_dir
    std::vector<std::string> notes;      // warnings and flags, also echoed in the manifest
};

// Runs the configured experiment, writes its CSV/JSON artifacts plus
// manifest.json; identical configs reproduce identical bytes.
RunResult run_experiment(const ExperimentConfig& config);

}  // namespace scalimit

#endif
