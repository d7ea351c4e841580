#ifndef SCALIMIT_CORE_BD_SIMULATOR_HPP
#define SCALIMIT_CORE_BD_SIMULATOR_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "core/model.hpp"
#include "core/rng.hpp"

namespace scalimit {

enum class EventKind : std::uint8_t { Birth = 0, Death = 1 };

// One exact birth/death trajectory, recorded event by event.  Event times are
// strictly increasing in (0, horizon_T]; the running count never goes below 0
// and no event follows absorption at 0.
struct JumpPath {
    struct Event {
        double t;
        EventKind kind;
    };
    std::vector<Event> events;
    long long initial_count = 0;
    double K = 1;
    double horizon_T = 0;

    long long count_after(std::size_t n_events) const;
    long long final_count() const { return count_after(events.size()); }
    double x_from_count(long long count) const { return static_cast<double>(count) / K; }
    double final_x() const { return x_from_count(final_count()); }
};

// Markov feedback control with the death-rate shift it induces.  h_max must
// dominate h(x, control(t, x)) over t in [0, T] for each x; it drives the
// thinning bound of the exact controlled simulation.
struct PolicyK {
    std::function<double(double, double)> control;  // (t, x) -> alpha
    std::function<double(double, double)> hK;       // (x, alpha) -> death-rate shift
    double a_lo = 0;                                // control interval [-a_lo, a_hi]
    double a_hi = 0;
    std::function<double(double)> h_max;            // x -> sup_t h(x, control(t, x))
};

struct SimulateOptions {
    std::uint64_t event_cap = 100'000'000;
};

// Exact Gillespie simulation: exponential waiting time with the total rate,
// birth with probability lambda_b / (lambda_b + lambda_d).
JumpPath simulate_path(const PopulationModel& model, const ScalingContext& ctx,
                       std::uint64_t seed, const SimulateOptions& opt = {});

// Exact simulation with death intensity lambda_d + h(x, alpha(t, x)); the
// time dependence of the shift is handled by thinning against
// lambda_b + lambda_d + h_max(x).
JumpPath simulate_controlled_path(const PopulationModel& model, const ScalingContext& ctx,
                                  const PolicyK& policy, std::uint64_t seed,
                                  const SimulateOptions& opt = {});

// The scaled processes of one path evaluated on a time grid.  The intensity
// integrals are exact: rates are constant between jumps.
struct ScaledSnapshot {
    std::vector<double> grid;
    std::vector<double> X;
    std::vector<double> Nbar_b, Nbar_d;            // N^i / K^2
    std::vector<double> Lambdabar_b, Lambdabar_d;  // int lambda^i K^-2 ds
    std::vector<double> Mbar_b, Mbar_d;            // M^i / K
};

ScaledSnapshot scaled_snapshot(const PopulationModel& model, const JumpPath& path,
                               std::span<const double> grid);

// Two processes on one event stream: a linear branching process with
// per-individual rates (branch_nu, branch_mu) that dominates the population
// pathwise.  Requires lambda_b(n/K) <= branch_nu n and
// lambda_d(n/K) >= branch_mu n at every visited population count n.
std::pair<JumpPath, JumpPath> thinning_coupled_pair(const PopulationModel& model,
                                                    const ScalingContext& ctx,
                                                    double branch_nu, double branch_mu,
                                                    std::uint64_t seed,
                                                    const SimulateOptions& opt = {});

// Doleans-Dade weight of the measure change that tilts the death intensity by
// h(x, alpha(t, x)), evaluated on a path simulated under the base intensities:
//   L_T = prod_{death jumps} (1 + h/lambda_d) * exp(-int_0^T h dt).
double likelihood_weight(const PopulationModel& model, const ScalingContext& ctx,
                         const JumpPath& path, const PolicyK& policy);

}  // namespace scalimit

#endif
