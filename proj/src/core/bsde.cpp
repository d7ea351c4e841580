#include "core/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "core/bd_simulator.hpp"
#include "core/feller.hpp"
#include "core/parallel.hpp"
#include "core/stats.hpp"

namespace scalimit {

namespace {

constexpr std::size_t kMaxDenseCells = 40'000'000;  // full-field Picard storage guard

std::vector<std::size_t> snapshot_steps(std::size_t n_steps, int snapshots) {
    std::size_t want = std::max(2, snapshots);
    std::vector<std::size_t> steps;
    if (n_steps + 1 <= want) {
        for (std::size_t k = 0; k <= n_steps; ++k) steps.push_back(k);
        return steps;
    }
    std::size_t stride = (n_steps + want - 2) / (want - 1);
    for (std::size_t k = 0; k < n_steps; k += stride) steps.push_back(k);
    steps.push_back(n_steps);
    return steps;
}

}  // namespace

std::size_t LatticeSolution::state_index(double x) const {
    if (states.empty()) throw numeric_error("empty lattice");
    double h = dx();
    auto idx = static_cast<long long>(std::llround((x - states.front()) / h));
    if (idx < 0 || idx >= static_cast<long long>(states.size()))
        throw domain_error(fmt::format("state {:g} outside the solved grid", x));
    return static_cast<std::size_t>(idx);
}

namespace {

// time interpolation weights over stored slices
struct SliceLoc {
    std::size_t i0, i1;
    double w;  // weight of slice i1
};

SliceLoc locate(const std::vector<double>& times, double t) {
    if (t <= times.front()) return {0, 0, 0.0};
    if (t >= times.back()) return {times.size() - 1, times.size() - 1, 0.0};
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i1 = static_cast<std::size_t>(it - times.begin());
    std::size_t i0 = i1 - 1;
    double w = (t - times[i0]) / (times[i1] - times[i0]);
    return {i0, i1, w};
}

}  // namespace

double LatticeSolution::u_at(double t, double x) const {
    SliceLoc s = locate(times, t);
    std::size_t j = state_index(x);
    return u[s.i0][j] * (1 - s.w) + u[s.i1][j] * s.w;
}

double LatticeSolution::z_b_at(double t, double x) const {
    SliceLoc s = locate(times, t);
    std::size_t j = state_index(x);
    auto diff = [&](std::size_t si) {
        return j + 1 < states.size() ? u[si][j + 1] - u[si][j] : 0.0;
    };
    return diff(s.i0) * (1 - s.w) + diff(s.i1) * s.w;
}

double LatticeSolution::z_d_at(double t, double x) const {
    SliceLoc s = locate(times, t);
    std::size_t j = state_index(x);
    auto diff = [&](std::size_t si) { return j > 0 ? u[si][j - 1] - u[si][j] : 0.0; };
    return diff(s.i0) * (1 - s.w) + diff(s.i1) * s.w;
}

double LatticeSolution::z_at(double t, double x) const {
    SliceLoc s = locate(times, t);
    std::size_t j = state_index(x);
    double h = dx();
    auto grad = [&](std::size_t si) {
        const auto& row = u[si];
        if (j == 0) return (row[1] - row[0]) / h;
        if (j + 1 == row.size()) return (row[j] - row[j - 1]) / h;
        return (row[j + 1] - row[j - 1]) / (2 * h);
    };
    return grad(s.i0) * (1 - s.w) + grad(s.i1) * s.w;
}

double default_x_max(const PopulationModel& model, const ScalingContext& ctx) {
    double xm = 4 * ctx.x0 * std::exp((model.nu() - model.mu()) * ctx.horizon_T);
    return std::max(xm, 16.0 / ctx.K);
}

double discrete_bsde_stable_dt(const PopulationModel& model, const ScalingContext& ctx,
                               double x_max) {
    long long m = std::llround(x_max * ctx.K);
    double max_rate = 0;
    for (long long i = 0; i <= m; ++i) {
        double x = static_cast<double>(i) / ctx.K;
        max_rate = std::max(max_rate, birth_intensity(model, ctx.K, x) +
                                          death_intensity(model, ctx.K, x));
    }
    if (max_rate <= 0) throw domain_error("discrete_bsde_stable_dt: vanishing intensities");
    return 0.5 / max_rate;
}

namespace {

struct DiscreteGrid {
    std::vector<double> states, lam_b, lam_d;
    double dt = 0;
    std::size_t n_steps = 0;
};

DiscreteGrid make_discrete_grid(const PopulationModel& model, const ScalingContext& ctx,
                                double x_max, double dt) {
    if (x_max <= 0) x_max = default_x_max(model, ctx);
    DiscreteGrid g;
    long long m = std::llround(x_max * ctx.K);
    if (m < 1) throw config_error("solve_discrete_bsde: x_max truncates the whole lattice");
    if (ctx.initial_count() > m)
        throw config_error("solve_discrete_bsde: x0 outside the truncated lattice");
    g.states.resize(static_cast<std::size_t>(m) + 1);
    g.lam_b.resize(g.states.size());
    g.lam_d.resize(g.states.size());
    double max_rate = 0;
    for (std::size_t i = 0; i < g.states.size(); ++i) {
        g.states[i] = static_cast<double>(i) / ctx.K;
        g.lam_b[i] = birth_intensity(model, ctx.K, g.states[i]);
        g.lam_d[i] = death_intensity(model, ctx.K, g.states[i]);
        max_rate = std::max(max_rate, g.lam_b[i] + g.lam_d[i]);
    }
    double stable = max_rate > 0 ? 0.5 / max_rate : ctx.horizon_T;
    if (dt <= 0) dt = stable;
    if (dt > stable * (1 + 1e-12))
        throw config_error(fmt::format(
            "solve_discrete_bsde: dt = {:g} violates the stability bound; need dt <= {:g}", dt,
            stable));
    g.n_steps = static_cast<std::size_t>(std::ceil(ctx.horizon_T / dt - 1e-9));
    g.dt = ctx.horizon_T / static_cast<double>(g.n_steps);
    return g;
}

// One explicit backward step of the lattice system into `out`.
// `source` supplies the driver contribution at the current slice, or the
// nonlinear generator is evaluated in place when `gen` is given.
void lattice_step(const DiscreteGrid& g, const GeneratorK* gen,
                  const std::vector<double>* frozen_source, const std::vector<double>& cur,
                  std::vector<double>& out) {
    const std::size_t ns = g.states.size();
    for (std::size_t i = 0; i < ns; ++i) {
        double zb = i + 1 < ns ? cur[i + 1] - cur[i] : 0.0;  // reflecting top closure
        double zd = i > 0 ? cur[i - 1] - cur[i] : 0.0;
        double rhs = g.lam_b[i] * zb + g.lam_d[i] * zd;
        if (gen && g.states[i] > 0)
            rhs += gen->g_b(g.states[i], cur[i], zb) * g.lam_b[i] +
                   gen->g_d(g.states[i], cur[i], zd) * g.lam_d[i];
        if (frozen_source) rhs += (*frozen_source)[i];
        out[i] = cur[i] + g.dt * rhs;
    }
}

void check_finite(const std::vector<double>& u, double t) {
    for (double v : u)
        if (!std::isfinite(v))
            throw numeric_error(fmt::format("lattice field non-finite at t = {:g}", t));
}

}  // namespace

LatticeSolution solve_discrete_bsde(const PopulationModel& model, const ScalingContext& ctx,
                                    const GeneratorK& gen,
                                    const std::function<double(double)>& terminal,
                                    double x_max, double dt, int snapshots) {
    if (!gen.g_b || !gen.g_d) throw domain_error("solve_discrete_bsde: generator components required");
    if (!terminal) throw domain_error("solve_discrete_bsde: terminal map required");
    DiscreteGrid g = make_discrete_grid(model, ctx, x_max, dt);

    LatticeSolution sol;
    sol.K = ctx.K;
    sol.states = g.states;
    std::vector<std::size_t> keep = snapshot_steps(g.n_steps, snapshots);
    sol.times.resize(keep.size());
    sol.u.resize(keep.size());

    std::vector<double> cur(g.states.size()), next(g.states.size());
    for (std::size_t i = 0; i < g.states.size(); ++i) cur[i] = terminal(g.states[i]);
    check_finite(cur, ctx.horizon_T);

    auto keep_it = keep.rbegin();
    auto store = [&](std::size_t k, const std::vector<double>& field) {
        while (keep_it != keep.rend() && *keep_it == k) {
            std::size_t pos = static_cast<std::size_t>(keep.rend() - keep_it) - 1;
            sol.times[pos] = static_cast<double>(k) * g.dt;
            sol.u[pos] = field;
            ++keep_it;
        }
    };
    store(g.n_steps, cur);
    for (std::size_t k = g.n_steps; k-- > 0;) {
        lattice_step(g, &gen, nullptr, cur, next);
        cur.swap(next);
        if (keep_it != keep.rend() && *keep_it == k) {
            check_finite(cur, static_cast<double>(k) * g.dt);
            store(k, cur);
        }
    }
    sol.times.front() = 0.0;
    return sol;
}

std::pair<LatticeSolution, ContractionReport> picard_solve_discrete(
    const PopulationModel& model, const ScalingContext& ctx, const GeneratorK& gen,
    const std::function<double(double)>& terminal, double x_max, double dt, int max_iters,
    double tol, int snapshots) {
    if (gen.weight_beta <= gen.lipschitz_L * gen.lipschitz_L + 2 * gen.lipschitz_L)
        throw domain_error("picard_solve_discrete: needs beta > L^2 + 2L");
    DiscreteGrid g = make_discrete_grid(model, ctx, x_max, dt);
    const std::size_t ns = g.states.size(), nt = g.n_steps + 1;
    if (ns * nt > kMaxDenseCells)
        throw config_error(fmt::format(
            "picard_solve_discrete: dense field needs {} cells; reduce K, x_max or T", ns * nt));

    std::vector<double> term(ns);
    for (std::size_t i = 0; i < ns; ++i) term[i] = terminal(g.states[i]);
    check_finite(term, ctx.horizon_T);

    // iterate F^K: freeze (Y, Z) in the driver, solve the linear system
    std::vector<std::vector<double>> prev(nt, std::vector<double>(ns, 0.0));
    std::vector<std::vector<double>> curr = prev;
    ContractionReport report;
    const double L = gen.lipschitz_L;
    report.alpha_bound = (L * L + L) / (gen.weight_beta - L);

    std::vector<double> source(ns);
    for (int p = 0; p < max_iters; ++p) {
        curr[nt - 1] = term;
        for (std::size_t k = nt - 1; k-- > 0;) {
            const std::vector<double>& frozen = prev[k + 1];
            for (std::size_t i = 0; i < ns; ++i) {
                if (g.states[i] <= 0) {
                    source[i] = 0;
                    continue;
                }
                double zb = i + 1 < ns ? frozen[i + 1] - frozen[i] : 0.0;
                double zd = i > 0 ? frozen[i - 1] - frozen[i] : 0.0;
                source[i] = gen.g_b(g.states[i], frozen[i], zb) * g.lam_b[i] +
                            gen.g_d(g.states[i], frozen[i], zd) * g.lam_d[i];
            }
            lattice_step(g, nullptr, &source, curr[k + 1], curr[k]);
        }
        check_finite(curr[0], 0.0);

        // weighted iterate distance: sup norms in place of the beta-weighted
        // H-norms (deterministic-lattice simplification)
        double dy = 0, dz = 0;
        for (std::size_t k = 0; k < nt; ++k) {
            for (std::size_t i = 0; i < ns; ++i) {
                dy = std::max(dy, std::abs(curr[k][i] - prev[k][i]));
                double dzb = i + 1 < ns ? (curr[k][i + 1] - curr[k][i]) - (prev[k][i + 1] - prev[k][i])
                                        : 0.0;
                double dzd = i > 0 ? (curr[k][i - 1] - curr[k][i]) - (prev[k][i - 1] - prev[k][i])
                                   : 0.0;
                dz = std::max(dz, dzb * dzb + dzd * dzd);
            }
        }
        double dist = std::sqrt(L * dy * dy + dz);
        if (!report.distances.empty())
            report.ratios.push_back(dist / report.distances.back());
        report.distances.push_back(dist);
        report.iterations = static_cast<std::size_t>(p) + 1;
        prev.swap(curr);
        if (dist < tol) {
            report.converged = true;
            break;
        }
        auto rn = report.ratios.size();
        if (rn >= 2 && report.ratios[rn - 1] >= 1.0 && report.ratios[rn - 2] >= 1.0)
            throw contraction_error(fmt::format(
                "picard_solve_discrete: distances stopped decaying (last ratios {:g}, {:g}); "
                "the generator likely violates its Lipschitz certificate",
                report.ratios[rn - 2], report.ratios[rn - 1]));
    }
    if (!report.converged)
        throw contraction_error(
            fmt::format("picard_solve_discrete: no convergence within {} iterations", max_iters));

    LatticeSolution sol;
    sol.K = ctx.K;
    sol.states = g.states;
    std::vector<std::size_t> keep = snapshot_steps(g.n_steps, snapshots);
    sol.times.reserve(keep.size());
    sol.u.reserve(keep.size());
    for (std::size_t k : keep) {
        sol.times.push_back(static_cast<double>(k) * g.dt);
        sol.u.push_back(prev[k]);
    }
    return {std::move(sol), std::move(report)};
}

LatticeSolution solve_limit_bsde(const PopulationModel& model, double x0, double T,
                                 const GeneratorCont& gen,
                                 const std::function<double(double)>& terminal,
                                 double x_max, int nx, double dt, int snapshots) {
    if (!gen || !terminal) throw domain_error("solve_limit_bsde: generator and terminal required");
    if (nx < 8) throw config_error("solve_limit_bsde: nx too small");
    if (!(dt > 0) || !(T > 0)) throw config_error("solve_limit_bsde: dt and T must be > 0");
    if (x_max <= 0) x_max = default_x_max(model, ScalingContext(1.0, x0, T));

    const std::size_t n = static_cast<std::size_t>(nx);
    const double hx = x_max / static_cast<double>(n);
    const std::size_t n_steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    const double ht = T / static_cast<double>(n_steps);

    std::vector<double> x(n + 1), drift(n + 1), diff(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        x[i] = static_cast<double>(i) * hx;
        drift[i] = net_drift(model, x[i]);
        diff[i] = model.sigma2(x[i]);
    }

    // tridiagonal rows of A = f d/dx + (1/2) sigma2 d2/dx2; row 0 is frozen
    // Dirichlet, row n folds the linear-extrapolation ghost into one-sided
    // convection.
    std::vector<double> lo(n + 1, 0), di(n + 1, 0), up(n + 1, 0);
    for (std::size_t i = 1; i < n; ++i) {
        double D = 0.5 * diff[i] / (hx * hx), C = drift[i] / (2 * hx);
        lo[i] = D - C;
        di[i] = -2 * D;
        up[i] = D + C;
    }
    lo[n] = -drift[n] / hx;
    di[n] = drift[n] / hx;

    const double theta = 0.5;
    // M1 = I - theta ht A (solved), M2 = I + (1-theta) ht A (applied)
    std::vector<double> m1lo(n + 1), m1di(n + 1), m1up(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        m1lo[i] = -theta * ht * lo[i];
        m1di[i] = 1.0 - theta * ht * di[i];
        m1up[i] = -theta * ht * up[i];
    }
    m1lo[0] = 0;
    m1di[0] = 1;
    m1up[0] = 0;

    auto apply_m2 = [&](const std::vector<double>& v, std::vector<double>& out) {
        out[0] = v[0];
        for (std::size_t i = 1; i < n; ++i)
            out[i] = v[i] + (1 - theta) * ht * (lo[i] * v[i - 1] + di[i] * v[i] + up[i] * v[i + 1]);
        out[n] = v[n] + (1 - theta) * ht * (lo[n] * v[n - 1] + di[n] * v[n]);
    };
    auto gen_term = [&](const std::vector<double>& v, std::vector<double>& out) {
        out[0] = 0;
        for (std::size_t i = 1; i <= n; ++i) {
            double z = i < n ? (v[i + 1] - v[i - 1]) / (2 * hx) : (v[n] - v[n - 1]) / hx;
            out[i] = gen(x[i], v[i], z) * diff[i];
        }
    };
    std::vector<double> cfac(n + 1), dfac(n + 1);
    auto thomas = [&](std::vector<double>& rhs, std::vector<double>& out) {
        cfac[0] = m1up[0] / m1di[0];
        dfac[0] = rhs[0] / m1di[0];
        for (std::size_t i = 1; i <= n; ++i) {
            double m = m1di[i] - m1lo[i] * cfac[i - 1];
            cfac[i] = i < n ? m1up[i] / m : 0.0;
            dfac[i] = (rhs[i] - m1lo[i] * dfac[i - 1]) / m;
        }
        out[n] = dfac[n];
        for (std::size_t i = n; i-- > 0;) out[i] = dfac[i] - cfac[i] * out[i + 1];
    };

    LatticeSolution sol;
    sol.states = x;
    std::vector<std::size_t> keep = snapshot_steps(n_steps, snapshots);
    sol.times.resize(keep.size());
    sol.u.resize(keep.size());

    std::vector<double> cur(n + 1), rhs(n + 1), srcA(n + 1), srcB(n + 1), pred(n + 1);
    for (std::size_t i = 0; i <= n; ++i) cur[i] = terminal(x[i]);
    check_finite(cur, T);
    const double frozen0 = cur[0];

    auto keep_it = keep.rbegin();
    auto store = [&](std::size_t k) {
        while (keep_it != keep.rend() && *keep_it == k) {
            std::size_t pos = static_cast<std::size_t>(keep.rend() - keep_it) - 1;
            sol.times[pos] = static_cast<double>(k) * ht;
            sol.u[pos] = cur;
            ++keep_it;
        }
    };
    store(n_steps);
    for (std::size_t k = n_steps; k-- > 0;) {
        gen_term(cur, srcA);
        apply_m2(cur, rhs);
        for (std::size_t i = 1; i <= n; ++i) rhs[i] += ht * srcA[i];
        rhs[0] = frozen0;
        thomas(rhs, pred);
        // corrector: re-center the driver on the predicted slice
        gen_term(pred, srcB);
        apply_m2(cur, rhs);
        for (std::size_t i = 1; i <= n; ++i) rhs[i] += ht * 0.5 * (srcA[i] + srcB[i]);
        rhs[0] = frozen0;
        thomas(rhs, cur);
        if (keep_it != keep.rend() && *keep_it == k) {
            check_finite(cur, static_cast<double>(k) * ht);
            store(k);
        }
    }
    sol.times.front() = 0.0;
    return sol;
}

double truncation_sensitivity(const PopulationModel& model, const ScalingContext& ctx,
                              const GeneratorK& gen,
                              const std::function<double(double)>& terminal, double x_max,
                              double dt) {
    if (x_max <= 0) x_max = default_x_max(model, ctx);
    LatticeSolution a = solve_discrete_bsde(model, ctx, gen, terminal, x_max, dt);
    LatticeSolution b = solve_discrete_bsde(model, ctx, gen, terminal, 2 * x_max, dt);
    double y0a = a.y0(ctx.x0_lattice()), y0b = b.y0(ctx.x0_lattice());
    return std::abs(y0a - y0b) / std::max(1.0, std::abs(y0a));
}

ExperimentTable convergence_report(const PopulationModel& model, const ScalingContext& ctx_any_K,
                                   const std::map<double, LatticeSolution>& discrete,
                                   const LatticeSolution& limit,
                                   const ConvergenceReportOptions& opt) {
    if (discrete.empty()) throw domain_error("convergence_report: no discrete solutions");
    const double T = ctx_any_K.horizon_T, x0 = ctx_any_K.x0;
    const std::size_t grid_n = 65;
    std::vector<double> grid(grid_n);
    for (std::size_t i = 0; i < grid_n; ++i)
        grid[i] = T * static_cast<double>(i) / static_cast<double>(grid_n - 1);

    // limit-side samples, shared by every K row
    std::vector<double> limit_y(opt.n_paths * grid_n);
    std::vector<double> limit_bracket(opt.n_paths);
    parallel_for(opt.n_paths, opt.workers, [&](std::size_t i) {
        ContinuousPath path = euler_path(model, x0, T, opt.dt_euler, opt.seed + i);
        double acc = 0;
        for (std::size_t k = 0; k + 1 < path.X.size(); ++k) {
            double z = limit.z_at(path.grid[k], std::min(path.X[k], limit.states.back()));
            acc += z * z * model.sigma2(path.X[k]) * (path.grid[k + 1] - path.grid[k]);
        }
        limit_bracket[i] = acc;
        for (std::size_t gi = 0; gi < grid_n; ++gi) {
            std::size_t k = std::min(static_cast<std::size_t>(std::llround(grid[gi] / path.dt())),
                                     path.X.size() - 1);
            limit_y[i * grid_n + gi] =
                limit.u_at(grid[gi], std::min(path.X[k], limit.states.back()));
        }
    });
    McStat bracket_limit = mc_stat(limit_bracket);
    const double y0_limit = limit.y0(x0);

    ExperimentTable table({"K", "y0K", "y0_limit", "y0_gap", "sup_y_gap", "sup_y_gap_se",
                           "bracket", "bracket_se", "bracket_limit", "bracket_limit_se"});
    for (const auto& [K, solK] : discrete) {
        ScalingContext ctx(K, x0, T);
        std::vector<double> sup_gap(opt.n_paths), bracket(opt.n_paths);
        parallel_for(opt.n_paths, opt.workers, [&](std::size_t i) {
            JumpPath path = simulate_path(model, ctx, opt.seed + i);
            double cap = solK.states.back();
            // bracket integral: rates are constant between jumps, the field
            // interpolates linearly between its stored slices
            double acc = 0, seg_start = 0;
            long long count = path.initial_count;
            std::size_t ev = 0;
            while (true) {
                double x = std::min(path.x_from_count(count), cap);
                double seg_end = ev < path.events.size() ? path.events[ev].t : T;
                double lb = birth_intensity(model, K, x), ld = death_intensity(model, K, x);
                double mid = (seg_start + seg_end) / 2;
                auto piece = [&](double t) {
                    double zb = solK.z_b_at(t, x), zd = solK.z_d_at(t, x);
                    return zb * zb * lb + zd * zd * ld;
                };
                acc += (seg_end - seg_start) / 6 *
                       (piece(seg_start) + 4 * piece(mid) + piece(seg_end));
                if (ev == path.events.size()) break;
                count += path.events[ev].kind == EventKind::Birth ? 1 : -1;
                seg_start = path.events[ev].t;
                ++ev;
            }
            bracket[i] = acc;

            double sup = 0;
            count = path.initial_count;
            ev = 0;
            for (std::size_t gi = 0; gi < grid_n; ++gi) {
                while (ev < path.events.size() && path.events[ev].t <= grid[gi]) {
                    count += path.events[ev].kind == EventKind::Birth ? 1 : -1;
                    ++ev;
                }
                double x = std::min(path.x_from_count(count), cap);
                double yk = solK.u_at(grid[gi], x);
                sup = std::max(sup, std::abs(yk - limit_y[i * grid_n + gi]));
            }
            sup_gap[i] = sup;
        });
        McStat sg = mc_stat(sup_gap), br = mc_stat(bracket);
        double y0K = solK.y0(ctx.x0_lattice());
        table.add_row({K, y0K, y0_limit, std::abs(y0K - y0_limit), sg.mean, sg.se(), br.mean,
                       br.se(), bracket_limit.mean, bracket_limit.se()});
    }
    return table;
}

}  // namespace scalimit
