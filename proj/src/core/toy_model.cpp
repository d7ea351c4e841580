#include "core/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <memory>

#include "core/bd_simulator.hpp"
#include "core/bsde.hpp"
#include "core/control.hpp"
#include "core/feller.hpp"
#include "core/parallel.hpp"
#include "core/quadrature.hpp"
#include "core/stats.hpp"

namespace scalimit {

namespace {

constexpr double kToyControlCap = toy_control_cap;

struct TripleState {
    double a, b, c;
};

double default_dt(const ToyParams& p, double dt) { return dt > 0 ? dt : p.T / 2000; }

}  // namespace

std::vector<std::string> ToyParams::standing_assumption_violations() const {
    std::vector<std::string> v;
    if (!(sigma2 > 2 * gamma * x_tilde))
        v.push_back(fmt::format("sigma2 = {:g} is not > 2 gamma x_tilde = {:g}", sigma2,
                                2 * gamma * x_tilde));
    if (!(gamma < mu)) v.push_back(fmt::format("gamma = {:g} is not < mu = {:g}", gamma, mu));
    return v;
}

OdeTriple solve_ode_triple(const ToyParams& p, std::optional<double> K, double dt) {
    if (!(p.T > 0)) throw domain_error("solve_ode_triple: T must be > 0");
    if (p.gamma < 0) throw domain_error("solve_ode_triple: gamma must be >= 0");
    if (K && !(*K > 0)) throw domain_error("solve_ode_triple: K must be > 0");
    dt = default_dt(p, dt);
    const std::size_t n = static_cast<std::size_t>(std::ceil(p.T / dt - 1e-9));
    const double h = p.T / static_cast<double>(n);
    const double nu = p.nu, mu = p.mu, s2 = p.sigma2;

    auto rhs = [&](const TripleState& y) -> TripleState {
        TripleState d;
        d.a = -2 * y.a * (nu - mu) - 2 * y.a * y.a;
        if (K) {
            d.b = 2 * y.a * (y.a / *K - y.b) - y.a * (s2 + (mu + nu) / *K) - y.b * (nu - mu);
            d.c = -0.5 * (y.a / *K - y.b) * (y.a / *K - y.b);
        } else {
            d.b = -2 * y.a * y.b - y.a * s2 - y.b * (nu - mu);
            d.c = -0.5 * y.b * y.b;
        }
        return d;
    };

    OdeTriple triple;
    triple.K = K;
    triple.grid.resize(n + 1);
    triple.a.resize(n + 1);
    triple.b.resize(n + 1);
    triple.c.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) triple.grid[i] = static_cast<double>(i) * h;
    triple.grid[n] = p.T;

    TripleState y{-p.gamma, 2 * p.gamma * p.x_tilde, -p.gamma * p.x_tilde * p.x_tilde};
    triple.a[n] = y.a;
    triple.b[n] = y.b;
    triple.c[n] = y.c;
    for (std::size_t i = n; i-- > 0;) {  // classic RK4 with step -h
        auto step = [&](const TripleState& s, double f, const TripleState& k) {
            return TripleState{s.a - f * h * k.a, s.b - f * h * k.b, s.c - f * h * k.c};
        };
        TripleState k1 = rhs(y);
        TripleState k2 = rhs(step(y, 0.5, k1));
        TripleState k3 = rhs(step(y, 0.5, k2));
        TripleState k4 = rhs(step(y, 1.0, k3));
        y.a -= h / 6 * (k1.a + 2 * k2.a + 2 * k3.a + k4.a);
        y.b -= h / 6 * (k1.b + 2 * k2.b + 2 * k3.b + k4.b);
        y.c -= h / 6 * (k1.c + 2 * k2.c + 2 * k3.c + k4.c);
        if (!std::isfinite(y.a + y.b + y.c))
            throw numeric_error(fmt::format("solve_ode_triple: non-finite state at t = {:g}",
                                            triple.grid[i]));
        triple.a[i] = y.a;
        triple.b[i] = y.b;
        triple.c[i] = y.c;
    }
    return triple;
}

namespace {

double interp(const std::vector<double>& grid, const std::vector<double>& vals, double t) {
    const double T = grid.back();
    if (t <= 0) return vals.front();
    if (t >= T) return vals.back();
    const double h = grid[1] - grid[0];
    std::size_t i = std::min(static_cast<std::size_t>(t / h), grid.size() - 2);
    double w = (t - grid[i]) / h;
    return vals[i] * (1 - w) + vals[i + 1] * w;
}

}  // namespace

double OdeTriple::a_at(double t) const { return interp(grid, a, t); }
double OdeTriple::b_at(double t) const { return interp(grid, b, t); }
double OdeTriple::c_at(double t) const { return interp(grid, c, t); }

double value_function(const OdeTriple& triple, double x) {
    return value_function_at(triple, 0.0, x);
}

double value_function_at(const OdeTriple& triple, double t, double x) {
    return triple.a_at(t) * x * x + triple.b_at(t) * x + triple.c_at(t);
}

double optimal_control_K(const OdeTriple& triple, double K, double t, double x) {
    if (x <= 0) return 0;
    return (triple.a_at(t) / K - 2 * x * triple.a_at(t) - triple.b_at(t)) / x;
}

double optimal_control(const OdeTriple& triple, double t, double x) {
    if (x <= 0) return 0;
    return -(2 * triple.a_at(t) * x + triple.b_at(t)) / x;
}

double admissibility_horizon(const ToyParams& p, std::optional<double> K, double dt) {
    if (p.gamma == 0) return p.T;  // degenerate case: b == 0 and alpha == 0
    OdeTriple triple = solve_ode_triple(p, K, dt);
    // The system is autonomous, so the horizon-T' solution is the tail window
    // [T - T', T] of the horizon-T solution; scan that window backwards.
    std::size_t n = triple.grid.size();
    std::size_t i = n;
    while (i-- > 0) {
        bool ok = triple.a[i] < 0 && triple.b[i] > 0;
        if (K) ok = ok && (p.sigma2 - triple.b[i] > 0);
        if (!ok) return p.T - triple.grid[std::min(i + 1, n - 1)];
    }
    return p.T;
}

namespace {

// PolicyK for alpha^{K,*} read off a solved triple, clamped to
// [-nu, kToyControlCap].  h_max is tabulated per lattice count; the node max
// is the exact sup because the interpolated (a, b) are piecewise linear in t.
PolicyK make_toy_policy(const OdeTriple& triple, const ToyParams& p, double K,
                        long long table_counts) {
    const double lo = -p.nu, hi = kToyControlCap;
    auto alpha_sup = [triple, K, lo, hi](double x) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < triple.grid.size(); ++i)
            m = std::max(m, (triple.a[i] / K - 2 * x * triple.a[i] - triple.b[i]) / x);
        return std::clamp(m, lo, hi);
    };
    auto table = std::make_shared<std::vector<double>>(static_cast<std::size_t>(table_counts) + 1);
    (*table)[0] = 0.0;
    for (long long cnt = 1; cnt <= table_counts; ++cnt) {
        double x = static_cast<double>(cnt) / K;
        (*table)[static_cast<std::size_t>(cnt)] = K * x * alpha_sup(x);
    }
    PolicyK pol;
    pol.control = [triple, K, lo, hi](double t, double x) {
        return std::clamp(optimal_control_K(triple, K, t, x), lo, hi);
    };
    pol.hK = [K](double x, double alpha) { return K * x * alpha; };
    pol.a_lo = p.nu;
    pol.a_hi = hi;
    pol.h_max = [table, K, alpha_sup](double x) {
        if (x <= 0) return 0.0;
        auto idx = static_cast<std::size_t>(std::llround(x * K));
        if (idx < table->size()) return (*table)[idx];
        return K * x * alpha_sup(x);
    };
    return pol;
}

// Splits [t0, t1] at the multiples of knot_dt and applies Simpson on each
// piece; exact for the piecewise-quadratic integrands built from linearly
// interpolated (a, b).
template <typename Fn>
double integrate_piecewise(Fn&& f, double t0, double t1, double knot_dt) {
    if (t1 <= t0) return 0;
    double s = 0;
    double left = t0;
    auto next_knot = [&](double t) {
        return (std::floor(t / knot_dt + 1e-12) + 1) * knot_dt;
    };
    while (left < t1) {
        double right = std::min(t1, next_knot(left));
        double m = (left + right) / 2;
        s += (right - left) / 6 * (f(left) + 4 * f(m) + f(right));
        left = right;
    }
    return s;
}

struct ControlledRunStats {
    double payoff = 0;    // xi + int c dt
    double final_x = 0;
    double alpha_at = 0;  // control evaluated at (t_eval, X_{t_eval})
};

ControlledRunStats run_controlled_toy_path(const ToyParams& p, const OdeTriple& triple, double K,
                                           const PolicyK& policy, std::uint64_t seed,
                                           double t_eval) {
    PopulationModel model = p.model();
    ScalingContext ctx(K, p.x0, p.T);
    JumpPath path = simulate_controlled_path(model, ctx, policy, seed);
    const double knot_dt = triple.grid[1] - triple.grid[0];

    double run_cost = 0, seg_start = 0;
    long long count = path.initial_count;
    double x_at_eval = path.x_from_count(count);
    std::size_t ev = 0;
    while (true) {
        double x = path.x_from_count(count);
        double seg_end = ev < path.events.size() ? path.events[ev].t : p.T;
        if (x > 0)
            run_cost += integrate_piecewise(
                [&](double s) {
                    double ax = policy.control(s, x) * x;
                    return -ax * ax / 2;
                },
                seg_start, seg_end, knot_dt);
        if (seg_start <= t_eval && t_eval <= seg_end) x_at_eval = x;
        if (ev == path.events.size()) break;
        count += path.events[ev].kind == EventKind::Birth ? 1 : -1;
        seg_start = path.events[ev].t;
        ++ev;
    }
    double xT = path.x_from_count(count);
    ControlledRunStats out;
    out.payoff = -p.gamma * (xT - p.x_tilde) * (xT - p.x_tilde) + run_cost;
    out.final_x = xT;
    out.alpha_at = policy.control(t_eval, x_at_eval);
    return out;
}

}  // namespace

ExperimentTable figure1_experiment(const ToyParams& p, const std::vector<double>& K_list,
                                   const Figure1Options& opt) {
    if (K_list.empty()) throw domain_error("figure1_experiment: empty K list");
    const double dt_ode = default_dt(p, opt.dt_ode);
    OdeTriple cont = solve_ode_triple(p, std::nullopt, dt_ode);
    const double V0 = value_function(cont, p.x0);

    ExperimentTable table(
        {"K", "V0K_ode", "Y0K_bsde", "J0K_mc", "J0K_mc_se", "V0_cont", "abs_err"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double K : K_list) {
        ScalingContext ctx(K, p.x0, p.T);
        OdeTriple triple = solve_ode_triple(p, K, dt_ode);
        const double x0K = ctx.x0_lattice();
        const double V0K = value_function(triple, x0K);

        double Y0K = nan;
        if (opt.with_bsde) {
            ControlProblemK prob = make_toy_problem_K(p, K);
            LatticeSolution sol =
                solve_discrete_bsde(prob.model, prob.ctx, build_generator(prob), prob.terminal);
            Y0K = sol.y0(x0K);
        }

        double J0 = nan, J0se = nan;
        if (opt.with_mc) {
            PolicyK pol = make_toy_policy(triple, p, K, std::llround(8 * p.x0 * K) + 64);
            std::vector<double> payoffs(opt.n_paths);
            parallel_for(opt.n_paths, opt.workers, [&](std::size_t i) {
                payoffs[i] =
                    run_controlled_toy_path(p, triple, K, pol, opt.seed + i, p.T).payoff;
            });
            McStat s = mc_stat(payoffs);
            J0 = s.mean;
            J0se = s.se();
        }
        table.add_row({K, V0K, Y0K, J0, J0se, V0, std::abs(V0K - V0)});
    }
    return table;
}

Figure2Result figure2_experiment(const ToyParams& p, const std::vector<double>& K_list,
                                 double t_eval, const Figure2Options& opt) {
    if (!(t_eval > 0) || t_eval > p.T)
        throw domain_error("figure2_experiment: t_eval must be in (0, T]");
    const double dt_ode = default_dt(p, opt.dt_ode);
    Figure2Result out;
    out.K_list = K_list;

    // Continuous reference: alpha* sampled under the optimally controlled law.
    OdeTriple cont = solve_ode_triple(p, std::nullopt, dt_ode);
    PopulationModel model = p.model();
    auto cont_policy = [&cont, &p](double t, double x) {
        return std::clamp(optimal_control(cont, t, x), -p.nu, kToyControlCap);
    };
    auto h = [](double x, double alpha) { return alpha * x; };
    out.reference_samples.resize(opt.n_paths);
    parallel_for(opt.n_paths, opt.workers, [&](std::size_t i) {
        ContinuousPath path =
            controlled_euler_path(model, p.x0, p.T, opt.dt_euler, cont_policy, h, opt.seed + i);
        std::size_t k = std::min(
            static_cast<std::size_t>(std::llround(t_eval / path.dt())), path.X.size() - 1);
        out.reference_samples[i] = cont_policy(t_eval, path.X[k]);
    });

    for (double K : K_list) {
        OdeTriple triple = solve_ode_triple(p, K, dt_ode);
        PolicyK pol = make_toy_policy(triple, p, K, std::llround(8 * p.x0 * K) + 64);
        std::vector<double> samples(opt.n_paths);
        parallel_for(opt.n_paths, opt.workers, [&](std::size_t i) {
            samples[i] =
                run_controlled_toy_path(p, triple, K, pol, opt.seed + 777 + i, t_eval).alpha_at;
        });
        out.ks.push_back(ks_statistic(samples, out.reference_samples));
        out.control_samples.push_back(std::move(samples));
    }
    return out;
}

}  // namespace scalimit
