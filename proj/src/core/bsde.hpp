#ifndef SCALIMIT_CORE_BSDE_HPP
#define SCALIMIT_CORE_BSDE_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "core/model.hpp"
#include "core/table.hpp"

namespace scalimit {

// Driver of the jump BSDE, componentwise: g_b(x, y, z_b), g_d(x, y, z_d).
// lipschitz_L certifies the scaled bound
//   K^2 |g_j(x, y, z/K) - g_j(x, y', z'/K)| <= L (|y-y'| + |z-z'|),
// and weight_beta > L^2 + 2L is the exponential weight of the solution space.
struct GeneratorK {
    std::function<double(double, double, double)> g_b;
    std::function<double(double, double, double)> g_d;
    double lipschitz_L = 0;
    double weight_beta = 0;
};

// Continuous-limit driver g(x, y, z).
using GeneratorCont = std::function<double(double, double, double)>;

// Backward-time field u(t, x) on the 1/K lattice (discrete case) or on a
// continuum grid (limit case), with the Y/Z processes read off as
// Y_t = u(t, X_t), Z = lattice differences (resp. du/dx).  Time slices are
// subsampled; values between stored slices interpolate linearly.
struct LatticeSolution {
    std::vector<double> times;   // stored slices, ascending, times[0] = 0
    std::vector<double> states;  // lattice {0, 1/K, ...} or continuum grid
    std::vector<std::vector<double>> u;  // u[slice][state]
    std::optional<double> K;

    double dx() const { return states.size() > 1 ? states[1] - states[0] : 0.0; }
    std::size_t state_index(double x) const;

    double u_at(double t, double x) const;
    // Discrete Z fields: exact lattice differences of u.
    double z_b_at(double t, double x) const;
    double z_d_at(double t, double x) const;
    // Continuum Z field: central differences, one-sided at the edges.
    double z_at(double t, double x) const;

    double y0(double x0) const { return u_at(0.0, x0); }
};

// Largest explicit-stable step and the default lattice truncation.
double discrete_bsde_stable_dt(const PopulationModel& model, const ScalingContext& ctx,
                               double x_max);
double default_x_max(const PopulationModel& model, const ScalingContext& ctx);

// Explicit backward stepping of the lattice system
//   du/dt + lambda_b D+u + lambda_d D-u + g_b(x,u,D+u) lambda_b
//                                       + g_d(x,u,D-u) lambda_d = 0,
// u(T, .) = terminal.  Requires dt * max total intensity <= 1/2.
// x_max <= 0 and dt <= 0 select the defaults.
LatticeSolution solve_discrete_bsde(const PopulationModel& model, const ScalingContext& ctx,
                                    const GeneratorK& gen,
                                    const std::function<double(double)>& terminal,
                                    double x_max = -1, double dt = -1, int snapshots = 513);

struct ContractionReport {
    std::vector<double> distances;  // ||(Y,Z) iterate differences||, weighted by L
    std::vector<double> ratios;     // successive distance ratios
    double alpha_bound = 0;         // (L^2 + L) / (beta - L), the contraction factor certificate
    std::size_t iterations = 0;
    bool converged = false;
};

// Picard iteration on the frozen-driver linear systems; distances must decay
// geometrically, otherwise a contraction_error reports the stall.
std::pair<LatticeSolution, ContractionReport> picard_solve_discrete(
    const PopulationModel& model, const ScalingContext& ctx, const GeneratorK& gen,
    const std::function<double(double)>& terminal, double x_max, double dt, int max_iters,
    double tol, int snapshots = 513);

// Crank-Nicolson stepping of the degenerate limit PDE
//   du/dt + f(x) du/dx + (1/2) sigma2(x) d2u/dx2 + g(x,u,du/dx) sigma2(x) = 0
// with the x = 0 row frozen at terminal(0).  The driver is advanced with a
// predictor-corrector pass, so its coupling is second order too.
LatticeSolution solve_limit_bsde(const PopulationModel& model, double x0, double T,
                                 const GeneratorCont& gen,
                                 const std::function<double(double)>& terminal,
                                 double x_max = -1, int nx = 2000, double dt = 1e-4,
                                 int snapshots = 513);

// Relative move of Y0 when the truncation radius doubles.
double truncation_sensitivity(const PopulationModel& model, const ScalingContext& ctx,
                              const GeneratorK& gen,
                              const std::function<double(double)>& terminal, double x_max,
                              double dt);

struct ConvergenceReportOptions {
    std::size_t n_paths = 2000;
    std::uint64_t seed = 20250810;
    unsigned workers = 0;
    double dt_euler = 1e-4;
};

// Theorem-style diagnostics: per-K gap |Y0^K - Y0|, Monte-Carlo sup-gap of the
// Y fields along simulated state paths, and the bracket statistics
// E int |Z^K|^2 . phi^K dA^K vs E int Z^2 dA.
ExperimentTable convergence_report(const PopulationModel& model, const ScalingContext& ctx_any_K,
                                   const std::map<double, LatticeSolution>& discrete,
                                   const LatticeSolution& limit,
                                   const ConvergenceReportOptions& opt = {});

}  // namespace scalimit

#endif
