#include "core/branching_moments.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "core/bd_simulator.hpp"
#include "core/parallel.hpp"
#include "core/stats.hpp"

namespace scalimit {

namespace {

constexpr double kBoundaryTol = 1e-12;
constexpr double kOverflowGuard = 1e308;

}  // namespace

MomentParams make_moment_params(double nu, double mu, double beta1, double beta2) {
    if (!(nu > 0) || mu < 0) throw domain_error("moment params need nu > 0 and mu >= 0");
    if (beta1 < 0 || beta2 < 0) throw domain_error("moment exponents must be >= 0");
    MomentParams p;
    p.nu = nu;
    p.mu = mu;
    p.beta1 = beta1;
    p.beta2 = beta2;
    p.gamma = (nu + mu - beta1) / (2 * nu);
    p.phi = nu * p.gamma * p.gamma - mu;
    if (!(p.phi > 0))
        throw domain_error(fmt::format("inadmissible exponents: phi = {:g} <= 0", p.phi));
    p.delta = std::sqrt(nu / p.phi) * (std::exp(beta2) - p.gamma);
    if (std::abs(p.delta - 1) <= kBoundaryTol * std::max(1.0, std::abs(p.delta))) {
        p.boundary = true;
        p.alpha_log = -std::numeric_limits<double>::infinity();
        p.t_star = std::numeric_limits<double>::infinity();
        return p;
    }
    if (p.delta < 1)
        throw domain_error(fmt::format("inadmissible exponents: delta = {:g} < 1", p.delta));
    p.alpha_log = std::log((p.delta - 1) / (p.delta + 1));
    p.t_star = -p.alpha_log / (2 * std::sqrt(nu * p.phi));
    return p;
}

double closed_form_F(long long n, const MomentParams& p, double t) {
    if (n < 0) throw domain_error("closed_form_F: n must be >= 0");
    if (t < 0) throw domain_error("closed_form_F: t must be >= 0");
    if (t >= p.t_star)
        throw numeric_error(
            fmt::format("moment blow-up: t = {:g} is past t_star = {:g}", t, p.t_star));
    // long double here: near t_star the denominator 1 - exp(...) cancels badly
    long double sq = std::sqrt(static_cast<long double>(p.nu) * static_cast<long double>(p.phi));
    long double expo = p.boundary
                           ? 0.0L
                           : std::exp(static_cast<long double>(p.alpha_log) + 2.0L * sq * t);
    long double base = std::sqrt(static_cast<long double>(p.phi) / p.nu) *
                           (2.0L / (1.0L - expo) - 1.0L) +
                       static_cast<long double>(p.gamma);
    if (!(base > 0) || !std::isfinite(static_cast<double>(base)))
        throw numeric_error(fmt::format("moment blow-up near t_star: base = {:g}",
                                        static_cast<double>(base)));
    long double logF = static_cast<long double>(n) * std::log(base);
    if (logF > std::log(static_cast<long double>(kOverflowGuard)))
        throw numeric_error(fmt::format("moment overflow: F would exceed {:g}", kOverflowGuard));
    return static_cast<double>(std::exp(logF));
}

double horizon_t_star(const MomentParams& p) { return p.t_star; }

LimitMoment limit_moment_psi(double a, double nu, double mu, double beta1, double beta2,
                             double t) {
    if (!(a > 0)) throw domain_error("limit_moment_psi: a must be > 0");
    if (beta1 < 0 || beta2 < 0) throw domain_error("limit_moment_psi: exponents must be >= 0");
    const double disc = (nu - mu) * (nu - mu) - 4 * a * beta1;
    if (!(disc > 0))
        throw domain_error(
            fmt::format("limit_moment_psi: (nu-mu)^2 - 4 a beta1 = {:g} <= 0", disc));
    LimitMoment lm;
    lm.eta = std::sqrt(disc) / 2;
    lm.lambda_inf = ((nu - mu) / (2 * a) + beta2) * (2 * a) / std::sqrt(disc);
    double expo;
    if (std::abs(lm.lambda_inf - 1) <= kBoundaryTol * std::max(1.0, std::abs(lm.lambda_inf))) {
        lm.t_star = std::numeric_limits<double>::infinity();
        expo = 0.0;
    } else if (lm.lambda_inf < 1) {
        throw domain_error(
            fmt::format("limit_moment_psi: Lambda_inf = {:g} < 1", lm.lambda_inf));
    } else {
        double alpha_inf = std::log((lm.lambda_inf - 1) / (lm.lambda_inf + 1));
        lm.t_star = -alpha_inf / (2 * lm.eta);
        if (t >= lm.t_star)
            throw numeric_error(
                fmt::format("limit moment blow-up: t = {:g} >= t_star = {:g}", t, lm.t_star));
        expo = std::exp(alpha_inf + 2 * lm.eta * t);
    }
    lm.psi = (mu - nu) / (2 * a) + (lm.eta / a) * (2 / (1 - expo) - 1);
    return lm;
}

UniformMomentCheck uniform_moment_check(const PopulationModel& model,
                                        const std::vector<double>& K_list, double beta1,
                                        double beta2, double x0, double T, std::size_t n_paths,
                                        std::uint64_t seed, unsigned workers) {
    if (model.kind() != PopulationModel::Kind::Linear)
        throw domain_error("uniform_moment_check requires a linear model");
    if (K_list.empty()) throw domain_error("uniform_moment_check: empty K list");
    const double a = model.sigma2_slope() / 2;
    UniformMomentCheck out;
    out.table = ExperimentTable(
        {"K", "estimate", "estimate_se", "closed_form", "psi_limit"});

    double psi_limit = std::numeric_limits<double>::quiet_NaN();
    if (beta1 == 0 && beta2 == 0) {
        psi_limit = 1.0;
    } else if (a > 0) {
        psi_limit = std::exp(x0 * limit_moment_psi(a, model.nu(), model.mu(), beta1, beta2, T).psi);
    }

    std::vector<double> prev_est, prev_se;
    for (std::size_t ki = 0; ki < K_list.size(); ++ki) {
        const double K = K_list[ki];
        ScalingContext ctx(K, x0, T);
        // The linear population count is itself a branching process with
        // per-head rates nu + aK and mu + aK, so the closed form is exact.
        double closed = std::numeric_limits<double>::quiet_NaN();
        if (beta1 == 0 && beta2 == 0) {
            closed = 1.0;
        } else {
            MomentParams p = make_moment_params(model.nu() + a * K, model.mu() + a * K,
                                                beta1 / K, beta2 / K);
            closed = closed_form_F(ctx.initial_count(), p, T);
        }
        std::vector<double> vals(n_paths);
        parallel_for(n_paths, workers, [&](std::size_t i) {
            JumpPath path = simulate_path(model, ctx, seed + 1315423911ull * (ki + 1) + i);
            // exact path integral of X^K: piecewise constant between jumps
            double integral = 0, seg_start = 0;
            long long count = path.initial_count;
            for (const auto& e : path.events) {
                integral += path.x_from_count(count) * (e.t - seg_start);
                seg_start = e.t;
                count += e.kind == EventKind::Birth ? 1 : -1;
            }
            integral += path.x_from_count(count) * (T - seg_start);
            vals[i] = std::exp(beta1 * integral + beta2 * path.x_from_count(count));
        });
        McStat s = mc_stat(vals);
        out.table.add_row({K, s.mean, s.se(), closed, psi_limit});
        prev_est.push_back(s.mean);
        prev_se.push_back(s.se());
    }
    // Upward trend beyond CI overlap between consecutive K
    for (std::size_t i = 1; i < prev_est.size(); ++i)
        if (prev_est[i] - prev_est[i - 1] > 3 * (prev_se[i] + prev_se[i - 1]))
            out.upward_trend = true;
    return out;
}

}  // namespace scalimit
