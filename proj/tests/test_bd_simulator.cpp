#include "doctest.h"

#include <cmath>
#include <vector>

#include "core/bd_simulator.hpp"
#include "core/stats.hpp"

using namespace scalimit;

namespace {

const PopulationModel kModel = PopulationModel::linear(0.2, 0.1, 0.3);

PolicyK constant_policy(double alpha, double K) {
    PolicyK pol;
    pol.control = [alpha](double, double) { return alpha; };
    pol.hK = [K](double x, double a) { return K * x * a; };
    pol.a_lo = std::max(0.0, -alpha);
    pol.a_hi = std::max(0.0, alpha);
    pol.h_max = [K, alpha](double x) { return std::max(0.0, K * x * alpha); };
    return pol;
}

}  // namespace

TEST_CASE("absorption at zero start") {
    ScalingContext ctx(8, 0.0, 1.0);
    JumpPath path = simulate_path(kModel, ctx, 1);
    CHECK(path.events.empty());
    CHECK(path.initial_count == 0);
}

TEST_CASE("path structure: ordered times, unit jumps, absorption") {
    // aggressive death model so extinction happens within the horizon
    PopulationModel dying = PopulationModel::linear(0.0, 3.0, 0.5);
    ScalingContext ctx(2, 2.0, 50.0);
    JumpPath path = simulate_path(dying, ctx, 7);
    double prev = 0;
    long long count = path.initial_count;
    for (const auto& e : path.events) {
        CHECK(e.t > prev);
        CHECK(e.t <= ctx.horizon_T);
        prev = e.t;
        count += e.kind == EventKind::Birth ? 1 : -1;
        CHECK(count >= 0);
    }
    CHECK(count == 0);  // extinction reached, then nothing more happened
}

TEST_CASE("reproducibility") {
    ScalingContext ctx(16, 50.0, 0.1);
    JumpPath a = simulate_path(kModel, ctx, 12345);
    JumpPath b = simulate_path(kModel, ctx, 12345);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].t == b.events[i].t);
        CHECK(a.events[i].kind == b.events[i].kind);
    }
    JumpPath c = simulate_path(kModel, ctx, 12346);
    CHECK(a.events.size() != c.events.size());
}

TEST_CASE("first moment and martingale mean at K = 16") {
    ScalingContext ctx(16, 50.0, 0.1);
    const std::size_t n = 10000;
    std::vector<double> xT(n), mbar_b(n);
    std::vector<double> grid = {ctx.horizon_T};
    for (std::size_t i = 0; i < n; ++i) {
        JumpPath path = simulate_path(kModel, ctx, 1000 + i);
        ScaledSnapshot snap = scaled_snapshot(kModel, path, grid);
        xT[i] = snap.X[0];
        mbar_b[i] = snap.Mbar_b[0];
    }
    McStat sx = mc_stat(xT);
    // dE[X]/dt = (nu - mu) E[X]
    CHECK(std::abs(sx.mean - 50.0 * std::exp(0.01)) <= 3 * sx.se());
    McStat sm = mc_stat(mbar_b);
    CHECK(std::abs(sm.mean) <= 3 * sm.se());
}

TEST_CASE("scaled snapshot identities") {
    ScalingContext ctx(8, 20.0, 0.2);
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(0.2 * i / 10.0);

    SUBCASE("empty path") {
        ScalingContext z(8, 50.0, 0.2);
        JumpPath path;
        path.initial_count = z.initial_count();
        path.K = z.K;
        path.horizon_T = z.horizon_T;
        ScaledSnapshot snap = scaled_snapshot(kModel, path, grid);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            CHECK(snap.X[g] == 50.0);
            CHECK(snap.Nbar_b[g] == 0.0);
            CHECK(snap.Mbar_b[g] == doctest::Approx(-z.K * snap.Lambdabar_b[g]).epsilon(1e-14));
        }
    }

    SUBCASE("definitional identities on random paths") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            JumpPath path = simulate_path(kModel, ctx, seed);
            ScaledSnapshot snap = scaled_snapshot(kModel, path, grid);
            for (std::size_t g = 0; g < grid.size(); ++g) {
                double rhs_b = ctx.K * (snap.Nbar_b[g] - snap.Lambdabar_b[g]);
                CHECK(snap.Mbar_b[g] == doctest::Approx(rhs_b).epsilon(1e-12).scale(1.0));
                double x_ident = ctx.x0_lattice() + ctx.K * (snap.Nbar_b[g] - snap.Nbar_d[g]);
                CHECK(snap.X[g] == doctest::Approx(x_ident).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("bracket identity: Var(Mbar_T) matches mean Lambdabar_T") {
    ScalingContext ctx(16, 50.0, 0.1);
    const std::size_t n = 10000;
    std::vector<double> mb(n), md(n), lb(n), ld(n);
    std::vector<double> grid = {ctx.horizon_T};
    for (std::size_t i = 0; i < n; ++i) {
        ScaledSnapshot s = scaled_snapshot(kModel, simulate_path(kModel, ctx, 555000 + i), grid);
        mb[i] = s.Mbar_b[0];
        md[i] = s.Mbar_d[0];
        lb[i] = s.Lambdabar_b[0];
        ld[i] = s.Lambdabar_d[0];
    }
    McStat smb = mc_stat(mb), slb = mc_stat(lb);
    McStat smd = mc_stat(md), sld = mc_stat(ld);
    // the variance estimator itself fluctuates at scale var sqrt(2/n)
    double tol_b = 3 * (slb.se() + smb.var * std::sqrt(2.0 / static_cast<double>(n)));
    double tol_d = 3 * (sld.se() + smd.var * std::sqrt(2.0 / static_cast<double>(n)));
    CHECK(std::abs(smb.var - slb.mean) <= tol_b);
    CHECK(std::abs(smd.var - sld.mean) <= tol_d);
}

TEST_CASE("controlled path with zero shift reproduces the base path") {
    ScalingContext ctx(16, 50.0, 0.1);
    JumpPath base = simulate_path(kModel, ctx, 31);
    JumpPath ctrl = simulate_controlled_path(kModel, ctx, constant_policy(0.0, ctx.K), 31);
    REQUIRE(base.events.size() == ctrl.events.size());
    for (std::size_t i = 0; i < base.events.size(); ++i) {
        CHECK(base.events[i].t == ctrl.events[i].t);
        CHECK(base.events[i].kind == ctrl.events[i].kind);
    }
}

TEST_CASE("controlled path: positive shift runs, inadmissible shift reports state") {
    ScalingContext ctx(8, 10.0, 0.1);
    CHECK_NOTHROW(simulate_controlled_path(kModel, ctx, constant_policy(1.5, ctx.K), 9));

    PolicyK bad;
    bad.control = [](double, double) { return 0.0; };
    bad.hK = [](double x, double) { return -death_intensity(kModel, 8, x) - 1.0; };
    bad.h_max = [](double) { return 0.0; };
    CHECK_THROWS_AS(simulate_controlled_path(kModel, ctx, bad, 9), admissibility_error);
}

TEST_CASE("controlled drift shows up in the mean") {
    ScalingContext ctx(16, 50.0, 0.1);
    const std::size_t n = 4000;
    double alpha = 0.5;  // drift becomes (nu - mu - alpha) x
    std::vector<double> xT(n);
    for (std::size_t i = 0; i < n; ++i)
        xT[i] = simulate_controlled_path(kModel, ctx, constant_policy(alpha, ctx.K), 77000 + i)
                    .final_x();
    McStat s = mc_stat(xT);
    CHECK(std::abs(s.mean - 50.0 * std::exp((0.1 - alpha) * 0.1)) <= 3 * s.se());
}

TEST_CASE("thinning coupling") {
    SUBCASE("degenerate coupling gives identical paths") {
        PopulationModel branching = PopulationModel::linear(0.4, 0.3, 0.0);
        ScalingContext ctx(1, 30.0, 0.5);
        auto [dom, pop] = thinning_coupled_pair(branching, ctx, 0.4, 0.3, 21);
        REQUIRE(dom.events.size() == pop.events.size());
        for (std::size_t i = 0; i < dom.events.size(); ++i) {
            CHECK(dom.events[i].t == pop.events[i].t);
            CHECK(dom.events[i].kind == pop.events[i].kind);
        }
    }

    SUBCASE("pathwise domination under the appendix envelope") {
        double K = 8;
        ScalingContext ctx(K, 20.0, 0.1);
        double branch_nu = kModel.nu() + kModel.sigma2_slope() * K / 2;
        double branch_mu = kModel.sigma2_slope() * K / 2;
        for (std::uint64_t seed = 0; seed < 300; ++seed) {
            auto [dom, pop] = thinning_coupled_pair(kModel, ctx, branch_nu, branch_mu, seed);
            long long n1 = dom.initial_count, n2 = pop.initial_count;
            std::size_t i = 0, j = 0;
            while (i < dom.events.size() || j < pop.events.size()) {
                bool take_dom = j >= pop.events.size() ||
                                (i < dom.events.size() && dom.events[i].t <= pop.events[j].t);
                if (take_dom) {
                    n1 += dom.events[i].kind == EventKind::Birth ? 1 : -1;
                    if (j < pop.events.size() && pop.events[j].t == dom.events[i].t) {
                        n2 += pop.events[j].kind == EventKind::Birth ? 1 : -1;
                        ++j;
                    }
                    ++i;
                } else {
                    n2 += pop.events[j].kind == EventKind::Birth ? 1 : -1;
                    ++j;
                }
                CHECK(n1 >= n2);
            }
        }
    }

    SUBCASE("zero start gives empty pair") {
        ScalingContext ctx(8, 0.0, 0.1);
        auto [dom, pop] = thinning_coupled_pair(kModel, ctx, 2.0, 1.0, 3);
        CHECK(dom.events.empty());
        CHECK(pop.events.empty());
    }

    SUBCASE("violated envelope raises with a witness") {
        PopulationModel branching = PopulationModel::linear(0.4, 0.3, 0.0);
        ScalingContext ctx(1, 30.0, 0.5);
        CHECK_THROWS_AS(thinning_coupled_pair(branching, ctx, 0.2, 0.3, 21), coupling_error);
    }
}

TEST_CASE("likelihood weight") {
    ScalingContext ctx(8, 30.0, 0.1);

    SUBCASE("identity policy") {
        JumpPath path = simulate_path(kModel, ctx, 17);
        CHECK(likelihood_weight(kModel, ctx, path, constant_policy(0.0, ctx.K)) == 1.0);
    }

    SUBCASE("normalization at a mild tilt") {
        PolicyK pol = constant_policy(0.1, ctx.K);
        const std::size_t n = 4000;
        std::vector<double> L(n);
        for (std::size_t i = 0; i < n; ++i)
            L[i] = likelihood_weight(kModel, ctx, simulate_path(kModel, ctx, 400 + i), pol);
        McStat s = mc_stat(L);
        CHECK(std::abs(s.mean - 1.0) <= 3 * s.se());
    }

    SUBCASE("Girsanov transfer against the controlled sampler") {
        PolicyK pol = constant_policy(0.1, ctx.K);
        const std::size_t n = 4000;
        std::vector<double> weighted(n), direct(n);
        for (std::size_t i = 0; i < n; ++i) {
            JumpPath base = simulate_path(kModel, ctx, 52000 + i);
            weighted[i] = base.final_x() * likelihood_weight(kModel, ctx, base, pol);
            direct[i] = simulate_controlled_path(kModel, ctx, pol, 91000 + i).final_x();
        }
        McStat sw = mc_stat(weighted), sd = mc_stat(direct);
        CHECK(std::abs(sw.mean - sd.mean) <= 3 * (sw.se() + sd.se()));
    }

    SUBCASE("nonpositive jump factor is a domain error") {
        PolicyK bad;
        bad.control = [](double, double) { return 0.0; };
        bad.hK = [](double x, double) { return -death_intensity(kModel, 8, x) - 1.0; };
        bad.h_max = [](double) { return 0.0; };
        JumpPath path = simulate_path(kModel, ctx, 5);
        bool has_death = false;
        for (const auto& e : path.events) has_death |= e.kind == EventKind::Death;
        REQUIRE(has_death);
        CHECK_THROWS_AS(likelihood_weight(kModel, ctx, path, bad), domain_error);
    }
}

TEST_CASE("event cap raises a resource error") {
    ScalingContext ctx(256, 50.0, 10.0);
    SimulateOptions opt;
    opt.event_cap = 1000;
    CHECK_THROWS_AS(simulate_path(kModel, ctx, 1, opt), resource_error);
}
