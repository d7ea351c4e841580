// scalimit command line: run/validate experiment configs against the shared
// library's C API.  Exit codes: 0 ok, 2 config error, 3 numeric/other error.
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "scalimit.h"

namespace {

int exit_code(scalimit_status s) {
    switch (s) {
        case SCALIMIT_OK:
            return 0;
        case SCALIMIT_ERR_CONFIG:
        case SCALIMIT_ERR_INVALID_ARG:
            return 2;
        default:
            return 3;
    }
}

int report(scalimit_status s) {
    if (s != SCALIMIT_OK) std::fprintf(stderr, "error: %s\n", scalimit_last_error());
    return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scalimit — birth/death scaling-limit experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false, out_set = false;

    CLI::App* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "override output directory")->each([&](const std::string&) {
        out_set = true;
    });
    run->add_option("--seed", seed, "override master seed")->each([&](const std::string&) {
        seed_set = true;
    });

    CLI::App* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("config", config_path, "experiment config (JSON)")->required();

    app.add_subcommand("list-experiments", "print the available experiment names");

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand("list-experiments")) {
        for (size_t i = 0; i < scalimit_experiment_count(); ++i)
            std::printf("%s\n", scalimit_experiment_name(i));
        return 0;
    }

    scalimit_config* cfg = nullptr;
    scalimit_status s = scalimit_config_parse_file(config_path.c_str(), &cfg);
    if (s != SCALIMIT_OK) return report(s);

    if (app.got_subcommand("validate")) {
        std::printf("ok\n");
        scalimit_config_free(cfg);
        return 0;
    }

    if (seed_set) scalimit_config_set_seed(cfg, seed);
    if (out_set) scalimit_config_set_output_dir(cfg, out_dir.c_str());
    s = scalimit_run(cfg);
    scalimit_config_free(cfg);
    if (s == SCALIMIT_OK) std::printf("done\n");
    return report(s);
}
