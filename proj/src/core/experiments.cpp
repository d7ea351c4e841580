#include "core/experiments.hpp"

#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

#include "core/branching_moments.hpp"
#include "core/bsde.hpp"
#include "core/control.hpp"
#include "core/errors.hpp"
#include "core/stats.hpp"
#include "core/table.hpp"
#include "core/toy_model.hpp"

namespace scalimit {

using nlohmann::json;

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "figure1", "figure2", "bsde_convergence", "control_convergence", "moments", "verify"};
    return names;
}

namespace {

[[noreturn]] void bad_field(const std::string& path, const std::string& why) {
    throw config_error(fmt::format("config error at {}: {}", path, why));
}

double num_at(const json& j, const std::string& path, const char* key, double fallback,
              bool required = false) {
    if (!j.contains(key)) {
        if (required) bad_field(path + "/" + key, "missing required field");
        return fallback;
    }
    if (!j[key].is_number()) bad_field(path + "/" + key, "must be a number");
    return j[key].get<double>();
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : j.items())
        if (!allowed.contains(k)) bad_field(path + "/" + k, "unknown field");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw config_error(fmt::format("config error at /: invalid JSON ({})", e.what()));
    }
    if (!j.is_object()) bad_field("/", "document must be a JSON object");
    check_keys(j, "", {"experiment", "model", "toy", "K_list", "n_paths", "dt", "seed",
                       "n_workers", "output_dir", "t_eval", "beta", "verify", "with_bsde",
                       "with_mc"});

    ExperimentConfig cfg;
    if (!j.contains("experiment") || !j["experiment"].is_string())
        bad_field("/experiment", "missing or not a string");
    cfg.experiment = j["experiment"].get<std::string>();
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
        bad_field("/experiment", "unknown experiment '" + cfg.experiment + "'");

    if (j.contains("model")) {
        const json& m = j["model"];
        if (!m.is_object()) bad_field("/model", "must be an object");
        check_keys(m, "/model", {"kind", "nu", "mu", "sigma2"});
        if (m.contains("kind") && m["kind"] != "linear")
            bad_field("/model/kind", "only 'linear' models are configurable");
        cfg.nu = num_at(m, "/model", "nu", cfg.nu);
        cfg.mu = num_at(m, "/model", "mu", cfg.mu);
        cfg.sigma2 = num_at(m, "/model", "sigma2", cfg.sigma2);
        if (cfg.nu < 0) bad_field("/model/nu", "must be >= 0");
        if (cfg.mu < 0) bad_field("/model/mu", "must be >= 0");
        if (cfg.sigma2 < 0) bad_field("/model/sigma2", "must be >= 0");
    }
    if (j.contains("toy")) {
        const json& t = j["toy"];
        if (!t.is_object()) bad_field("/toy", "must be an object");
        check_keys(t, "/toy", {"gamma", "x_tilde", "x0", "T"});
        cfg.gamma = num_at(t, "/toy", "gamma", cfg.gamma);
        cfg.x_tilde = num_at(t, "/toy", "x_tilde", cfg.x_tilde);
        cfg.x0 = num_at(t, "/toy", "x0", cfg.x0);
        cfg.T = num_at(t, "/toy", "T", cfg.T);
        if (cfg.gamma < 0) bad_field("/toy/gamma", "must be >= 0");
        if (!(cfg.x_tilde > 0)) bad_field("/toy/x_tilde", "must be > 0");
        if (!(cfg.x0 >= 0)) bad_field("/toy/x0", "must be >= 0");
        if (!(cfg.T > 0)) bad_field("/toy/T", "must be > 0");
    }
    if (j.contains("K_list")) {
        if (!j["K_list"].is_array() || j["K_list"].empty())
            bad_field("/K_list", "must be a nonempty array");
        double prev = 0;
        for (std::size_t i = 0; i < j["K_list"].size(); ++i) {
            const json& v = j["K_list"][i];
            if (!v.is_number()) bad_field(fmt::format("/K_list/{}", i), "must be a number");
            double K = v.get<double>();
            if (!(K > 0)) bad_field(fmt::format("/K_list/{}", i), "must be > 0");
            if (K <= prev) bad_field(fmt::format("/K_list/{}", i), "must be strictly ascending");
            prev = K;
            cfg.K_list.push_back(K);
        }
    }
    if (j.contains("n_paths")) {
        if (!j["n_paths"].is_number_unsigned() || j["n_paths"].get<std::uint64_t>() == 0)
            bad_field("/n_paths", "must be a positive integer");
        cfg.n_paths = j["n_paths"].get<std::size_t>();
    }
    if (j.contains("dt")) {
        const json& d = j["dt"];
        if (!d.is_object()) bad_field("/dt", "must be an object");
        check_keys(d, "/dt", {"ode", "euler", "pde", "lattice"});
        cfg.dt_ode = num_at(d, "/dt", "ode", cfg.dt_ode);
        cfg.dt_euler = num_at(d, "/dt", "euler", cfg.dt_euler);
        cfg.dt_pde = num_at(d, "/dt", "pde", cfg.dt_pde);
        cfg.dt_lattice = num_at(d, "/dt", "lattice", cfg.dt_lattice);
        if (!(cfg.dt_euler > 0)) bad_field("/dt/euler", "must be > 0");
        if (!(cfg.dt_pde > 0)) bad_field("/dt/pde", "must be > 0");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) bad_field("/seed", "must be a nonnegative integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("n_workers")) {
        if (!j["n_workers"].is_number_unsigned()) bad_field("/n_workers", "must be an integer >= 0");
        cfg.n_workers = j["n_workers"].get<unsigned>();
    }
    if (j.contains("output_dir")) {
        if (!j["output_dir"].is_string()) bad_field("/output_dir", "must be a string");
        cfg.output_dir = j["output_dir"].get<std::string>();
    }
    if (j.contains("t_eval")) {
        cfg.t_eval = num_at(j, "", "t_eval", cfg.t_eval);
        if (!(cfg.t_eval > 0)) bad_field("/t_eval", "must be > 0");
    } else {
        cfg.t_eval = cfg.T;
    }
    if (j.contains("beta")) {
        if (!j["beta"].is_array() || j["beta"].size() != 2)
            bad_field("/beta", "must be an array [beta1, beta2]");
        if (!j["beta"][0].is_number() || !j["beta"][1].is_number())
            bad_field("/beta", "entries must be numbers");
        cfg.beta1 = j["beta"][0].get<double>();
        cfg.beta2 = j["beta"][1].get<double>();
        if (cfg.beta1 < 0 || cfg.beta2 < 0) bad_field("/beta", "entries must be >= 0");
    }
    if (j.contains("verify")) {
        const json& v = j["verify"];
        if (!v.is_object()) bad_field("/verify", "must be an object");
        check_keys(v, "/verify", {"mode", "K"});
        if (v.contains("mode")) {
            if (!v["mode"].is_string()) bad_field("/verify/mode", "must be a string");
            cfg.verify_mode = v["mode"].get<std::string>();
            if (cfg.verify_mode != "discrete" && cfg.verify_mode != "continuous")
                bad_field("/verify/mode", "must be 'discrete' or 'continuous'");
        }
        cfg.verify_K = num_at(v, "/verify", "K", cfg.verify_K);
        if (!(cfg.verify_K > 0)) bad_field("/verify/K", "must be > 0");
    }
    if (j.contains("with_bsde")) {
        if (!j["with_bsde"].is_boolean()) bad_field("/with_bsde", "must be a boolean");
        cfg.with_bsde = j["with_bsde"].get<bool>();
    }
    if (j.contains("with_mc")) {
        if (!j["with_mc"].is_boolean()) bad_field("/with_mc", "must be a boolean");
        cfg.with_mc = j["with_mc"].get<bool>();
    }
    if (cfg.K_list.empty() && cfg.experiment != "verify")
        bad_field("/K_list", "required for this experiment");
    if (cfg.experiment == "figure2" && cfg.t_eval > cfg.T)
        bad_field("/t_eval", "must be <= toy horizon T");
    cfg.echo = j.dump(2);
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("config error at /: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

namespace {

ToyParams toy_of(const ExperimentConfig& c) {
    ToyParams p;
    p.nu = c.nu;
    p.mu = c.mu;
    p.sigma2 = c.sigma2;
    p.gamma = c.gamma;
    p.x_tilde = c.x_tilde;
    p.x0 = c.x0;
    p.T = c.T;
    return p;
}

struct ArtifactWriter {
    std::filesystem::path dir;
    std::vector<std::pair<std::string, std::string>> digests;

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw error("cannot write artifact " + (dir / name).string());
        out << content;
        digests.emplace_back(name, content_digest(content));
    }
};

std::string samples_csv(const std::vector<double>& values, const char* column) {
    std::string out = fmt::format("path_id,{}\r\n", column);
    for (std::size_t i = 0; i < values.size(); ++i)
        out += fmt::format("{},{}\r\n", i, format_value(values[i]));
    return out;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& c) {
    RunResult result;
    std::filesystem::create_directories(c.output_dir);
    ArtifactWriter w{c.output_dir, {}};
    ToyParams toy = toy_of(c);
    const std::string digest = content_digest(c.echo);
    for (const auto& v : toy.standing_assumption_violations())
        result.notes.push_back("standing assumption: " + v);

    if (c.experiment == "figure1") {
        Figure1Options opt;
        opt.dt_ode = c.dt_ode;
        opt.dt_euler = c.dt_euler;
        opt.n_paths = c.n_paths;
        opt.seed = c.seed;
        opt.workers = c.n_workers;
        opt.with_bsde = c.with_bsde;
        opt.with_mc = c.with_mc;
        ExperimentTable t = figure1_experiment(toy, c.K_list, opt);
        t.set_provenance(digest);
        w.write("figure1.csv", t.to_csv());
    } else if (c.experiment == "figure2") {
        Figure2Options opt;
        opt.dt_ode = c.dt_ode;
        opt.dt_euler = c.dt_euler;
        opt.n_paths = c.n_paths;
        opt.seed = c.seed;
        opt.workers = c.n_workers;
        Figure2Result f2 = figure2_experiment(toy, c.K_list, c.t_eval, opt);
        for (std::size_t i = 0; i < f2.K_list.size(); ++i)
            w.write(fmt::format("figure2_samples_K{:g}.csv", f2.K_list[i]),
                    samples_csv(f2.control_samples[i], "alpha_value"));
        w.write("figure2_reference.csv", samples_csv(f2.reference_samples, "alpha_value"));
        ExperimentTable t({"K", "ks_stat", "n"});
        for (std::size_t i = 0; i < f2.K_list.size(); ++i)
            t.add_row({f2.K_list[i], f2.ks[i], static_cast<double>(c.n_paths)});
        t.set_provenance(digest);
        w.write("figure2_summary.csv", t.to_csv());
    } else if (c.experiment == "bsde_convergence") {
        std::map<double, LatticeSolution> discrete;
        for (double K : c.K_list) {
            ControlProblemK prob = make_toy_problem_K(toy, K);
            discrete.emplace(K, solve_discrete_bsde(prob.model, prob.ctx, build_generator(prob),
                                                    prob.terminal, -1, c.dt_lattice));
        }
        ControlProblem cont = make_toy_problem(toy);
        LatticeSolution limit = solve_limit_bsde(cont.model, cont.x0, cont.T,
                                                 build_generator(cont), cont.terminal, -1, 2000,
                                                 c.dt_pde);
        {
            ControlProblemK prob = make_toy_problem_K(toy, c.K_list.front());
            double move = truncation_sensitivity(prob.model, prob.ctx, build_generator(prob),
                                                 prob.terminal, -1, c.dt_lattice);
            if (move >= 1e-4)
                result.notes.push_back(fmt::format(
                    "warning: lattice truncation moved Y0 by {:.3g} relative at K = {:g}", move,
                    c.K_list.front()));
        }
        ConvergenceReportOptions opt;
        opt.n_paths = c.n_paths;
        opt.seed = c.seed;
        opt.workers = c.n_workers;
        opt.dt_euler = c.dt_euler;
        ScalingContext ctx(c.K_list.front(), c.x0, c.T);
        ExperimentTable t = convergence_report(toy.model(), ctx, discrete, limit, opt);
        t.set_provenance(digest);
        w.write("bsde_convergence.csv", t.to_csv());
    } else if (c.experiment == "control_convergence") {
        ControlConvergenceOptions opt;
        opt.n_paths = c.n_paths;
        opt.seed = c.seed;
        opt.workers = c.n_workers;
        opt.dt_euler = c.dt_euler;
        ExperimentTable t = control_convergence_stats(toy, c.K_list, opt);
        t.set_provenance(digest);
        w.write("control_convergence.csv", t.to_csv());
    } else if (c.experiment == "moments") {
        UniformMomentCheck mc = uniform_moment_check(toy.model(), c.K_list, c.beta1, c.beta2,
                                                     c.x0, c.T, c.n_paths, c.seed, c.n_workers);
        if (mc.upward_trend)
            result.notes.push_back("flag: moment estimates trend upward beyond CI overlap");
        mc.table.set_provenance(digest);
        w.write("moments.csv", mc.table.to_csv());
    } else if (c.experiment == "verify") {
        VerifyOptions opt;
        opt.dt = c.dt_lattice;
        opt.dt_euler = c.dt_euler;
        opt.n_paths = c.n_paths;
        opt.seed = c.seed;
        opt.workers = c.n_workers;
        VerificationReport rep;
        if (c.verify_mode == "discrete")
            rep = solve_and_verify_K(make_toy_problem_K(toy, c.verify_K), opt);
        else
            rep = solve_and_verify_continuous(make_toy_problem(toy), opt);
        w.write("verify.json", rep.to_json() + "\n");
        if (!rep.pass) result.notes.push_back("flag: verification battery did not pass");
    } else {
        throw config_error("config error at /experiment: unknown experiment " + c.experiment);
    }

    json manifest;
    manifest["config"] = json::parse(c.echo);
    manifest["config_digest"] = digest;
    manifest["seed"] = c.seed;
    manifest["version"] = "scalimit 1.0.0";
    manifest["artifacts"] = json::array();
    for (const auto& [name, d] : w.digests) {
        manifest["artifacts"].push_back({{"file", name}, {"digest", d}});
        result.artifacts.push_back(name);
    }
    manifest["notes"] = result.notes;
    std::ofstream out(std::filesystem::path(c.output_dir) / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
    result.artifacts.push_back("manifest.json");
    return result;
}

}  // namespace scalimit
