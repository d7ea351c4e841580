#include "doctest.h"

#include <cmath>
#include <vector>

#include "core/bd_simulator.hpp"
#include "core/branching_moments.hpp"
#include "core/stats.hpp"

using namespace scalimit;

TEST_CASE("moment params admissibility") {
    // nu > mu at beta = 0 sits exactly on the delta = 1 boundary
    MomentParams p0 = make_moment_params(0.8, 0.7, 0.0, 0.0);
    CHECK(p0.boundary);
    CHECK(std::isinf(p0.t_star));
    for (long long n : {0LL, 1LL, 5LL, 400LL})
        CHECK(closed_form_F(n, p0, 3.0) == doctest::Approx(1.0).epsilon(1e-12));

    // mu > nu at beta = 0 gives delta = -1: inadmissible with a clear error
    CHECK_THROWS_AS(make_moment_params(0.7, 0.8, 0.0, 0.0), domain_error);
    // phi <= 0
    CHECK_THROWS_AS(make_moment_params(0.8, 0.7, 0.2, 0.05), domain_error);
}

TEST_CASE("closed form values and horizon") {
    MomentParams p = make_moment_params(0.5, 0.2, 0.02, 0.05);
    CHECK(p.t_star == doctest::Approx(6.532301652109201).epsilon(1e-12));

    // t = 0 reduces to the terminal exponent
    for (long long n : {1LL, 3LL, 17LL})
        CHECK(closed_form_F(n, p, 0.0) ==
              doctest::Approx(std::exp(0.05 * static_cast<double>(n))).epsilon(1e-12));

    // branching independence: F(n, t) = F(1, t)^n exactly
    double f1 = closed_form_F(1, p, 1.7);
    for (long long n : {2LL, 5LL, 11LL})
        CHECK(closed_form_F(n, p, 1.7) ==
              doctest::Approx(std::pow(f1, static_cast<double>(n))).epsilon(1e-12));

    // monotone in t and n
    CHECK(closed_form_F(1, p, 1.0) < closed_form_F(1, p, 2.0));
    CHECK(closed_form_F(2, p, 1.0) > closed_form_F(1, p, 1.0));

    // blow-up past the horizon and the overflow guard near it
    CHECK_THROWS_AS(closed_form_F(1, p, p.t_star), numeric_error);
    CHECK(closed_form_F(1, p, 0.99 * p.t_star) > 1e6 * closed_form_F(1, p, 0.5 * p.t_star));
    CHECK(horizon_t_star(p) == p.t_star);
}

TEST_CASE("closed form satisfies its riccati equation") {
    // f' = nu f^2 - (nu + mu - beta1) f + mu, f(0) = e^{beta2}
    MomentParams p = make_moment_params(0.5, 0.2, 0.02, 0.05);
    auto f = [&](double t) { return closed_form_F(1, p, t); };
    for (double t : {0.125, 0.5, 1.0, 2.0, 4.0}) {
        double h = 1e-5;
        double lhs = (f(t + h) - f(t - h)) / (2 * h);
        double ft = f(t);
        double rhs = 0.5 * ft * ft - (0.5 + 0.2 - 0.02) * ft + 0.2;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
}

TEST_CASE("doubling beta2 never increases t_star") {
    for (double b2 : {0.01, 0.02, 0.05, 0.1, 0.2}) {
        MomentParams lo = make_moment_params(0.5, 0.2, 0.01, b2);
        MomentParams hi = make_moment_params(0.5, 0.2, 0.01, 2 * b2);
        CHECK(hi.t_star <= lo.t_star + 1e-12);
    }
}

TEST_CASE("closed form against branching monte carlo") {
    // pure branching process as a bd model: K = 1, no sigma^2 term
    double K = 8;
    double nu_K = 0.2 + 0.15 * K, mu_K = 0.15 * K;
    double b1 = 0.4 / K, b2 = 0.4 / K;
    MomentParams p = make_moment_params(nu_K, mu_K, b1, b2);
    const double t = 0.1;
    REQUIRE(t < p.t_star);
    long long n0 = 40;
    double expected = closed_form_F(n0, p, t);

    PopulationModel branching = PopulationModel::linear(nu_K, mu_K, 0.0);
    ScalingContext ctx(1, static_cast<double>(n0), t);
    const std::size_t n_paths = 10000;
    std::vector<double> vals(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) {
        JumpPath path = simulate_path(branching, ctx, 300 + i);
        double integral = 0, seg = 0;
        long long count = path.initial_count;
        for (const auto& e : path.events) {
            integral += static_cast<double>(count) * (e.t - seg);
            seg = e.t;
            count += e.kind == EventKind::Birth ? 1 : -1;
        }
        integral += static_cast<double>(count) * (t - seg);
        vals[i] = std::exp(b1 * integral + b2 * static_cast<double>(count));
    }
    McStat s = mc_stat(vals);
    CHECK(std::abs(s.mean - expected) <= 3 * s.se());
}

TEST_CASE("limit moment psi") {
    SUBCASE("zero exponents give psi = 0") {
        LimitMoment lm = limit_moment_psi(0.15, 0.2, 0.1, 0.0, 0.0, 0.05);
        CHECK(lm.psi == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }

    SUBCASE("pre-limit closed form converges to e^{n psi}") {
        double a = 0.15, nu = 0.2, mu = 0.1, b1 = 0.01, b2 = 0.05, t = 0.1;
        LimitMoment lm = limit_moment_psi(a, nu, mu, b1, b2, t);
        long long n = 50;
        double target = std::exp(static_cast<double>(n) * lm.psi);
        double prev_diff = 1e100;
        double prev_tstar_diff = 1e100;
        for (double K : {8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0}) {
            MomentParams p = make_moment_params(nu + a * K, mu + a * K, b1 / K, b2 / K);
            double diff = std::abs(closed_form_F(n * static_cast<long long>(K), p, t) - target);
            CHECK(diff < prev_diff);
            prev_diff = diff;
            double td = std::abs(p.t_star - lm.t_star);
            CHECK(td < prev_tstar_diff);
            prev_tstar_diff = td;
        }
        // within 1% at the last Ks
        MomentParams last = make_moment_params(nu + a * 512, mu + a * 512, b1 / 512, b2 / 512);
        CHECK(std::abs(last.t_star - lm.t_star) <= 0.01 * lm.t_star);
    }

    SUBCASE("condition violations raise") {
        CHECK_THROWS_AS(limit_moment_psi(0.15, 0.2, 0.1, 0.1, 0.0, 0.05), domain_error);
    }
}

TEST_CASE("uniform moment check") {
    PopulationModel model = PopulationModel::linear(0.2, 0.1, 0.3);

    SUBCASE("zero exponents give exact ones") {
        UniformMomentCheck mc =
            uniform_moment_check(model, {4, 8}, 0.0, 0.0, 10.0, 0.1, 200, 5);
        for (std::size_t r = 0; r < mc.table.n_rows(); ++r) {
            CHECK(mc.table.at(r, "estimate") == 1.0);
            CHECK(mc.table.at(r, "closed_form") == 1.0);
        }
        CHECK_FALSE(mc.upward_trend);
    }

    SUBCASE("small exponents track the psi limit across K") {
        UniformMomentCheck mc =
            uniform_moment_check(model, {4, 8, 16, 32}, 0.01, 0.05, 50.0, 0.1, 10000, 6);
        for (std::size_t r = 0; r < mc.table.n_rows(); ++r) {
            double est = mc.table.at(r, "estimate");
            double se = mc.table.at(r, "estimate_se");
            CHECK(std::abs(est - mc.table.at(r, "psi_limit")) <= 3 * se);
            CHECK(std::abs(est - mc.table.at(r, "closed_form")) <= 3 * se);
        }
        CHECK_FALSE(mc.upward_trend);
    }
}
