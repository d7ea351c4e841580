#ifndef SCALIMIT_CORE_TOY_MODEL_HPP
#define SCALIMIT_CORE_TOY_MODEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/table.hpp"

namespace scalimit {

// Control interval of the toy experiments is [-nu, toy_control_cap]; the cap
// never binds at the reference parameters (sup alpha* = 2 gamma there).
inline constexpr double toy_control_cap = 2.0;

// Quadratic-cost population-steering problem: terminal penalty
// -gamma (X_T - x_tilde)^2, running cost -(alpha X)^2 / 2.
struct ToyParams {
    double nu = 0.2, mu = 0.1, sigma2 = 0.3;
    double gamma = 1.0;
    double x_tilde = 20.0;
    double x0 = 50.0;
    double T = 0.1;

    PopulationModel model() const { return PopulationModel::linear(nu, mu, sigma2); }
    // The standing smallness assumption sigma^2 > 2 gamma x_tilde, gamma < mu.
    // Reported, not enforced: the reference parameter set itself violates it
    // while every numerical experiment at that set is perfectly well posed.
    std::vector<std::string> standing_assumption_violations() const;
};

// Backward solution of the Riccati system for the quadratic value ansatz
// U(t, x) = a(t) x^2 + b(t) x + c(t), on a uniform grid over [0, T].
// K absent means the continuous-limit system (whose a-equation coincides
// with the discrete one for every K).
struct OdeTriple {
    std::vector<double> grid;
    std::vector<double> a, b, c;
    std::optional<double> K;

    double T() const { return grid.back(); }
    double a_at(double t) const;
    double b_at(double t) const;
    double c_at(double t) const;
};

OdeTriple solve_ode_triple(const ToyParams& params, std::optional<double> K, double dt);

// U(0, x) from a solved triple; the problem value is value_function(triple, x0).
double value_function(const OdeTriple& triple, double x);
double value_function_at(const OdeTriple& triple, double t, double x);

// Feedback controls: alpha^{K,*} carries the 1/K correction term, the
// continuous one is -(2 a x + b)/x; both vanish at x = 0.
double optimal_control_K(const OdeTriple& triple, double K, double t, double x);
double optimal_control(const OdeTriple& triple, double t, double x);

// Largest T' <= T with a < 0, b > 0 (and sigma^2 - b_K > 0 in the discrete
// case) along the horizon-T' solution; by autonomy this is a tail window of
// the horizon-T solution.
double admissibility_horizon(const ToyParams& params, std::optional<double> K,
                             double dt = -1);

struct Figure1Options {
    double dt_ode = -1;      // default T / 2000
    double dt_euler = 1e-4;  // continuous MC scheme step
    std::size_t n_paths = 10000;
    std::uint64_t seed = 20250810;
    unsigned workers = 0;
    bool with_bsde = true;
    bool with_mc = true;
};

// Figure-1 table: per-K value from the Riccati system, from the BSDE lattice
// and from controlled Monte-Carlo, against the continuous value.
ExperimentTable figure1_experiment(const ToyParams& params, const std::vector<double>& K_list,
                                   const Figure1Options& opt = {});

struct Figure2Result {
    // one sample vector of alpha^{K,*}_{t_eval} per K, plus the continuous
    // reference samples and per-K two-sample KS distances
    std::vector<double> K_list;
    std::vector<std::vector<double>> control_samples;
    std::vector<double> reference_samples;
    std::vector<double> ks;
};

struct Figure2Options {
    double dt_ode = -1;
    double dt_euler = 1e-4;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 20250810;
    unsigned workers = 0;
};

Figure2Result figure2_experiment(const ToyParams& params, const std::vector<double>& K_list,
                                 double t_eval, const Figure2Options& opt = {});

}  // namespace scalimit

#endif
