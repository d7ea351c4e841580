#include "core/bd_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "core/quadrature.hpp"

namespace scalimit {

namespace {

void check_event_budget(const PopulationModel& model, const ScalingContext& ctx,
                        std::uint64_t cap) {
    // Crude a-priori estimate: initial total rate, exponential drift envelope.
    double x0 = ctx.x0_lattice();
    double rate0 = birth_intensity(model, ctx.K, x0) + death_intensity(model, ctx.K, x0);
    double growth = std::exp(std::max(0.0, model.nu()) * ctx.horizon_T);
    double expected = rate0 * ctx.horizon_T * growth;
    if (expected > 4.0 * static_cast<double>(cap))
        throw resource_error(fmt::format(
            "expected event count ~{:.3g} exceeds cap {}", expected, cap));
}

}  // namespace

long long JumpPath::count_after(std::size_t n_events) const {
    long long c = initial_count;
    for (std::size_t i = 0; i < n_events && i < events.size(); ++i)
        c += events[i].kind == EventKind::Birth ? 1 : -1;
    return c;
}

JumpPath simulate_path(const PopulationModel& model, const ScalingContext& ctx,
                       std::uint64_t seed, const SimulateOptions& opt) {
    check_event_budget(model, ctx, opt.event_cap);
    CounterRng rng(seed);
    JumpPath path;
    path.initial_count = ctx.initial_count();
    path.K = ctx.K;
    path.horizon_T = ctx.horizon_T;

    long long count = path.initial_count;
    double t = 0;
    while (count > 0) {
        double x = path.x_from_count(count);
        double lb = birth_intensity(model, ctx.K, x);
        double ld = death_intensity(model, ctx.K, x);
        double total = lb + ld;
        if (total <= 0) break;
        t += rng.exponential(total);
        if (t > ctx.horizon_T) break;
        bool birth = rng.uniform() < lb / total;
        count += birth ? 1 : -1;
        path.events.push_back({t, birth ? EventKind::Birth : EventKind::Death});
        if (path.events.size() > opt.event_cap)
            throw resource_error(fmt::format("event cap {} exceeded at t = {:g}", opt.event_cap, t));
    }
    return path;
}

JumpPath simulate_controlled_path(const PopulationModel& model, const ScalingContext& ctx,
                                  const PolicyK& policy, std::uint64_t seed,
                                  const SimulateOptions& opt) {
    if (!policy.control || !policy.hK)
        throw domain_error("simulate_controlled_path: policy must provide control and hK");
    check_event_budget(model, ctx, opt.event_cap);
    CounterRng rng(seed);
    JumpPath path;
    path.initial_count = ctx.initial_count();
    path.K = ctx.K;
    path.horizon_T = ctx.horizon_T;

    long long count = path.initial_count;
    double t = 0;
    std::uint64_t proposals = 0;
    while (count > 0) {
        double x = path.x_from_count(count);
        double lb = birth_intensity(model, ctx.K, x);
        double ld = death_intensity(model, ctx.K, x);
        double hub = policy.h_max ? std::max(0.0, policy.h_max(x)) : 0.0;
        double bound = lb + ld + hub;
        if (bound <= 0) break;
        t += rng.exponential(bound);
        if (t > ctx.horizon_T) break;
        if (++proposals > opt.event_cap)
            throw resource_error(fmt::format("event cap {} exceeded at t = {:g}", opt.event_cap, t));
        double alpha = policy.control(t, x);
        double ld_ctrl = ld + policy.hK(x, alpha);
        if (ld_ctrl < 0)
            throw admissibility_error(
                fmt::format("controlled death intensity {:g} < 0 at t={:g}, x={:g}, alpha={:g}",
                            ld_ctrl, t, x, alpha),
                t, x, alpha);
        if (ld_ctrl > ld + hub + 1e-9 * std::max(1.0, ld))
            throw domain_error(fmt::format(
                "policy h_max({:g}) = {:g} does not dominate h = {:g}", x, hub, ld_ctrl - ld));
        double u = rng.uniform() * bound;
        if (u < lb) {
            ++count;
            path.events.push_back({t, EventKind::Birth});
        } else if (u < lb + ld_ctrl) {
            --count;
            path.events.push_back({t, EventKind::Death});
        }
        // otherwise a thinning ghost: no event
    }
    return path;
}

ScaledSnapshot scaled_snapshot(const PopulationModel& model, const JumpPath& path,
                               std::span<const double> grid) {
    for (double g : grid)
        if (g < 0 || g > path.horizon_T + 1e-12)
            throw domain_error("scaled_snapshot: grid point outside [0, T]");
    ScaledSnapshot snap;
    snap.grid.assign(grid.begin(), grid.end());
    std::size_t n = grid.size();
    snap.X.resize(n);
    snap.Nbar_b.resize(n);
    snap.Nbar_d.resize(n);
    snap.Lambdabar_b.resize(n);
    snap.Lambdabar_d.resize(n);
    snap.Mbar_b.resize(n);
    snap.Mbar_d.resize(n);

    const double K = path.K, K2 = K * K;
    long long count = path.initial_count;
    long long nb = 0, nd = 0;
    double lam_b_int = 0, lam_d_int = 0;  // unscaled integrals of lambda^i
    double seg_start = 0;
    std::size_t ev = 0;
    for (std::size_t gi = 0; gi < n; ++gi) {
        double tg = snap.grid[gi];
        while (ev < path.events.size() && path.events[ev].t <= tg) {
            double x = path.x_from_count(count);
            double dt = path.events[ev].t - seg_start;
            lam_b_int += birth_intensity(model, K, x) * dt;
            lam_d_int += death_intensity(model, K, x) * dt;
            if (path.events[ev].kind == EventKind::Birth) {
                ++nb;
                ++count;
            } else {
                ++nd;
                --count;
            }
            seg_start = path.events[ev].t;
            ++ev;
        }
        double x = path.x_from_count(count);
        double lb = lam_b_int + birth_intensity(model, K, x) * (tg - seg_start);
        double ld = lam_d_int + death_intensity(model, K, x) * (tg - seg_start);
        snap.X[gi] = x;
        snap.Nbar_b[gi] = static_cast<double>(nb) / K2;
        snap.Nbar_d[gi] = static_cast<double>(nd) / K2;
        snap.Lambdabar_b[gi] = lb / K2;
        snap.Lambdabar_d[gi] = ld / K2;
        snap.Mbar_b[gi] = (static_cast<double>(nb) - lb) / K;
        snap.Mbar_d[gi] = (static_cast<double>(nd) - ld) / K;
    }
    return snap;
}

std::pair<JumpPath, JumpPath> thinning_coupled_pair(const PopulationModel& model,
                                                    const ScalingContext& ctx,
                                                    double branch_nu, double branch_mu,
                                                    std::uint64_t seed,
                                                    const SimulateOptions& opt) {
    if (branch_nu < 0 || branch_mu < 0)
        throw domain_error("thinning_coupled_pair: branching rates must be >= 0");
    check_event_budget(model, ctx, opt.event_cap);
    CounterRng rng(seed);
    JumpPath dom, pop;
    dom.initial_count = pop.initial_count = ctx.initial_count();
    dom.K = pop.K = ctx.K;
    dom.horizon_T = pop.horizon_T = ctx.horizon_T;

    long long n1 = dom.initial_count;  // dominating branching count
    long long n2 = pop.initial_count;  // population count
    double t = 0;
    std::uint64_t steps = 0;
    while (n1 > 0 || n2 > 0) {
        double x2 = pop.x_from_count(n2);
        double gb = birth_intensity(model, ctx.K, x2);
        double gd = death_intensity(model, ctx.K, x2);
        double lb1 = branch_nu * static_cast<double>(n1);
        double ld1 = branch_mu * static_cast<double>(n1);
        // Lemma envelope at the visited state: population births no faster
        // than branch_nu per head, deaths no slower than branch_mu per head.
        double nb2 = branch_nu * static_cast<double>(n2);
        double md2 = branch_mu * static_cast<double>(n2);
        if (gb > nb2 + 1e-9 * std::max(1.0, nb2) || gd + 1e-9 * std::max(1.0, gd) < md2)
            throw coupling_error(
                fmt::format("thinning envelope violated at t={:g}: population count {} has "
                            "rates ({:g}, {:g}) vs per-head envelope ({:g}, {:g})",
                            t, n2, gb, gd, nb2, md2),
                t, n2);
        double joint_birth = gb;
        double solo_birth = std::max(0.0, lb1 - gb);
        double joint_death = std::min(ld1, gd);
        double solo_branch_death = std::max(0.0, ld1 - gd);
        double solo_pop_death = std::max(0.0, gd - ld1);
        double total = joint_birth + solo_birth + joint_death + solo_branch_death + solo_pop_death;
        if (total <= 0) break;
        t += rng.exponential(total);
        if (t > ctx.horizon_T) break;
        if (++steps > opt.event_cap)
            throw resource_error(fmt::format("event cap {} exceeded at t = {:g}", opt.event_cap, t));
        double u = rng.uniform() * total;
        if (u < joint_birth) {
            ++n1;
            ++n2;
            dom.events.push_back({t, EventKind::Birth});
            pop.events.push_back({t, EventKind::Birth});
        } else if (u < joint_birth + solo_birth) {
            ++n1;
            dom.events.push_back({t, EventKind::Birth});
        } else if (u < joint_birth + solo_birth + joint_death) {
            --n1;
            --n2;
            dom.events.push_back({t, EventKind::Death});
            pop.events.push_back({t, EventKind::Death});
        } else if (u < joint_birth + solo_birth + joint_death + solo_branch_death) {
            --n1;
            dom.events.push_back({t, EventKind::Death});
        } else {
            --n2;
            pop.events.push_back({t, EventKind::Death});
        }
    }
    return {std::move(dom), std::move(pop)};
}

double likelihood_weight(const PopulationModel& model, const ScalingContext& ctx,
                         const JumpPath& path, const PolicyK& policy) {
    if (!policy.control || !policy.hK)
        throw domain_error("likelihood_weight: policy must provide control and hK");
    long long count = path.initial_count;
    double log_l = 0;
    double seg_start = 0;
    std::size_t ev = 0;
    auto segment = [&](double x, double a, double b) {
        if (b <= a || x <= 0) return 0.0;
        return integrate_gl16([&](double s) { return policy.hK(x, policy.control(s, x)); }, a, b);
    };
    while (ev <= path.events.size()) {
        double x = path.x_from_count(count);
        double seg_end = ev < path.events.size() ? path.events[ev].t : path.horizon_T;
        log_l -= segment(x, seg_start, seg_end);
        if (ev == path.events.size()) break;
        const auto& e = path.events[ev];
        if (e.kind == EventKind::Death) {
            double ld = death_intensity(model, ctx.K, x);
            if (ld <= 0)
                throw domain_error(fmt::format(
                    "likelihood_weight: death jump at t={:g} from state x={:g} with lambda_d = 0", e.t, x));
            double factor = 1.0 + policy.hK(x, policy.control(e.t, x)) / ld;
            if (factor <= 0)
                throw domain_error(fmt::format(
                    "likelihood_weight: nonpositive jump factor {:g} at t={:g}, x={:g}", factor, e.t, x));
            log_l += std::log(factor);
            --count;
        } else {
            ++count;
        }
        seg_start = e.t;
        ++ev;
    }
    return std::exp(log_l);
}

}  // namespace scalimit
