#include "doctest.h"

#include <cmath>
#include <map>
#include <vector>

#include "core/bd_simulator.hpp"
#include "core/bsde.hpp"
#include "core/control.hpp"
#include "core/stats.hpp"
#include "core/toy_model.hpp"

using namespace scalimit;

namespace {

const PopulationModel kModel = PopulationModel::linear(0.2, 0.1, 0.3);

GeneratorK zero_generator() {
    GeneratorK g;
    g.g_b = [](double, double, double) { return 0.0; };
    g.g_d = [](double, double, double) { return 0.0; };
    g.lipschitz_L = 0.5;
    g.weight_beta = 2.0;
    return g;
}

}  // namespace

TEST_CASE("constant terminal is a fixed point") {
    ScalingContext ctx(8, 10.0, 0.1);
    LatticeSolution sol = solve_discrete_bsde(kModel, ctx, zero_generator(),
                                              [](double) { return 3.25; });
    for (const auto& slice : sol.u)
        for (double v : slice) CHECK(v == doctest::Approx(3.25).epsilon(1e-13));
    CHECK(sol.z_b_at(0.05, 5.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-13));
    CHECK(sol.z_d_at(0.05, 5.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-13));
}

TEST_CASE("driverless solve reproduces the chain expectation") {
    ScalingContext ctx(16, 50.0, 0.1);
    LatticeSolution sol =
        solve_discrete_bsde(kModel, ctx, zero_generator(), [](double x) { return x; });
    double y0 = sol.y0(ctx.x0_lattice());
    // dE[X]/dt = (nu - mu) E[X] holds exactly for the linear model
    CHECK(y0 == doctest::Approx(50.0 * std::exp(0.01)).epsilon(2e-4));

    const std::size_t n = 10000;
    std::vector<double> xT(n);
    for (std::size_t i = 0; i < n; ++i) xT[i] = simulate_path(kModel, ctx, 2000 + i).final_x();
    McStat s = mc_stat(xT);
    CHECK(std::abs(y0 - s.mean) <= 3 * s.se());
}

TEST_CASE("stability bound is enforced with the required dt reported") {
    ScalingContext ctx(16, 10.0, 0.1);
    try {
        solve_discrete_bsde(kModel, ctx, zero_generator(), [](double x) { return x; }, -1, 0.5);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("need dt <=") != std::string::npos);
    }
}

TEST_CASE("comparison principle for the driverless scheme") {
    ScalingContext ctx(8, 10.0, 0.1);
    LatticeSolution lo =
        solve_discrete_bsde(kModel, ctx, zero_generator(), [](double x) { return -x * x; });
    LatticeSolution hi = solve_discrete_bsde(kModel, ctx, zero_generator(),
                                             [](double x) { return -x * x + 0.5 * x + 1; });
    REQUIRE(lo.u.size() == hi.u.size());
    for (std::size_t t = 0; t < lo.u.size(); ++t)
        for (std::size_t i = 0; i < lo.u[t].size(); ++i) CHECK(lo.u[t][i] <= hi.u[t][i] + 1e-12);
}

TEST_CASE("toy generator reproduces the riccati value at K = 16") {
    ToyParams p;
    ControlProblemK prob = make_toy_problem_K(p, 16.0);
    LatticeSolution sol =
        solve_discrete_bsde(prob.model, prob.ctx, build_generator(prob), prob.terminal);
    OdeTriple triple = solve_ode_triple(p, 16.0, -1);
    double v = value_function(triple, prob.ctx.x0_lattice());
    CHECK(std::abs(sol.y0(prob.ctx.x0_lattice()) - v) <= 1e-3 * std::abs(v));
}

TEST_CASE("discrete z fields scale into the continuous gradient") {
    // K Z^{K,d}(0, x0) -> -Z(0, x0) = -dU/dx
    ToyParams p;
    OdeTriple cont = solve_ode_triple(p, std::nullopt, -1);
    double du = 2 * cont.a.front() * p.x0 + cont.b.front();
    double prev = 1e300;
    for (double K : {8.0, 16.0, 32.0}) {
        ControlProblemK prob = make_toy_problem_K(p, K);
        LatticeSolution sol =
            solve_discrete_bsde(prob.model, prob.ctx, build_generator(prob), prob.terminal);
        double kzd = K * sol.z_d_at(0.0, prob.ctx.x0_lattice());
        double gap = std::abs(kzd - (-du));
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev < 0.2);  // |du| is ~51 here; the K = 32 gap sits well below 1 percent
}

TEST_CASE("picard iteration") {
    ScalingContext ctx(8, 10.0, 0.05);

    SUBCASE("zero driver converges immediately") {
        auto [sol, rep] = picard_solve_discrete(kModel, ctx, zero_generator(),
                                                [](double x) { return x; }, -1, -1, 20, 1e-10);
        CHECK(rep.converged);
        CHECK(rep.iterations <= 2);
        LatticeSolution direct =
            solve_discrete_bsde(kModel, ctx, zero_generator(), [](double x) { return x; });
        CHECK(sol.y0(ctx.x0_lattice()) ==
              doctest::Approx(direct.y0(ctx.x0_lattice())).epsilon(1e-12));
    }

    SUBCASE("toy generator contracts and agrees with the direct solver") {
        ToyParams p;
        ControlProblemK prob = make_toy_problem_K(p, 8.0);
        GeneratorK gen = build_generator(prob);
        const double tol = 1e-7;
        auto [sol, rep] =
            picard_solve_discrete(prob.model, prob.ctx, gen, prob.terminal, -1, -1, 60, tol);
        CHECK(rep.converged);
        CHECK(rep.alpha_bound < 1.0);
        for (std::size_t i = 1; i < rep.ratios.size(); ++i)
            CHECK(rep.ratios[i] <= rep.alpha_bound);
        LatticeSolution direct =
            solve_discrete_bsde(prob.model, prob.ctx, gen, prob.terminal);
        CHECK(std::abs(sol.y0(prob.ctx.x0_lattice()) - direct.y0(prob.ctx.x0_lattice())) <=
              10 * tol);
    }
}

TEST_CASE("limit pde solver") {
    SUBCASE("constant terminal is a fixed point") {
        GeneratorCont zero = [](double, double, double) { return 0.0; };
        LatticeSolution sol =
            solve_limit_bsde(kModel, 10.0, 0.1, zero, [](double) { return 2.5; }, -1, 400, 1e-3);
        for (const auto& slice : sol.u)
            for (double v : slice) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
    }

    SUBCASE("linear terminal reproduces the moment flow") {
        GeneratorCont zero = [](double, double, double) { return 0.0; };
        LatticeSolution sol =
            solve_limit_bsde(kModel, 50.0, 0.1, zero, [](double x) { return x; }, -1, 2000, 1e-4);
        CHECK(sol.y0(50.0) == doctest::Approx(50.0 * std::exp(0.01)).epsilon(2e-4));
    }

    SUBCASE("toy generator reproduces the continuous riccati value") {
        ToyParams p;
        ControlProblem prob = make_toy_problem(p);
        LatticeSolution sol = solve_limit_bsde(prob.model, prob.x0, prob.T,
                                               build_generator(prob), prob.terminal);
        OdeTriple cont = solve_ode_triple(p, std::nullopt, -1);
        double v = value_function(cont, p.x0);
        CHECK(std::abs(sol.y0(p.x0) - v) <= 1e-3 * std::abs(v));
    }

    SUBCASE("grid refinement is cauchy") {
        ToyParams p;
        ControlProblem prob = make_toy_problem(p);
        GeneratorCont gen = build_generator(prob);
        double y_coarse = solve_limit_bsde(prob.model, prob.x0, prob.T, gen, prob.terminal, -1,
                                           500, 8e-4)
                              .y0(p.x0);
        double y_mid =
            solve_limit_bsde(prob.model, prob.x0, prob.T, gen, prob.terminal, -1, 1000, 4e-4)
                .y0(p.x0);
        double y_fine =
            solve_limit_bsde(prob.model, prob.x0, prob.T, gen, prob.terminal, -1, 2000, 2e-4)
                .y0(p.x0);
        CHECK(std::abs(y_fine - y_mid) <= std::abs(y_mid - y_coarse) + 1e-9);
    }
}

TEST_CASE("truncation sensitivity is small for the toy problem") {
    ToyParams p;
    ControlProblemK prob = make_toy_problem_K(p, 8.0);
    double move =
        truncation_sensitivity(prob.model, prob.ctx, build_generator(prob), prob.terminal, -1, -1);
    CHECK(move < 1e-4);
}

TEST_CASE("convergence report") {
    SUBCASE("constant terminal zeroes every error column") {
        ScalingContext ctx(8, 10.0, 0.05);
        std::map<double, LatticeSolution> discrete;
        discrete.emplace(8.0, solve_discrete_bsde(kModel, ctx, zero_generator(),
                                                  [](double) { return 1.5; }));
        GeneratorCont zero = [](double, double, double) { return 0.0; };
        LatticeSolution limit =
            solve_limit_bsde(kModel, 10.0, 0.05, zero, [](double) { return 1.5; }, -1, 400, 1e-3);
        ConvergenceReportOptions opt;
        opt.n_paths = 100;
        ExperimentTable t = convergence_report(kModel, ctx, discrete, limit, opt);
        CHECK(t.at(0, "y0_gap") == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        CHECK(t.at(0, "sup_y_gap") == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        CHECK(t.at(0, "bracket") == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }

    SUBCASE("toy family y0 gaps decrease in K") {
        ToyParams p;
        std::map<double, LatticeSolution> discrete;
        for (double K : {4.0, 8.0, 16.0}) {
            ControlProblemK prob = make_toy_problem_K(p, K);
            discrete.emplace(K, solve_discrete_bsde(prob.model, prob.ctx, build_generator(prob),
                                                    prob.terminal));
        }
        ControlProblem cont = make_toy_problem(p);
        LatticeSolution limit =
            solve_limit_bsde(cont.model, cont.x0, cont.T, build_generator(cont), cont.terminal);
        ConvergenceReportOptions opt;
        opt.n_paths = 400;
        ScalingContext ctx(4.0, p.x0, p.T);
        ExperimentTable t = convergence_report(p.model(), ctx, discrete, limit, opt);
        REQUIRE(t.n_rows() == 3);
        CHECK(t.at(0, "y0_gap") > t.at(1, "y0_gap"));
        CHECK(t.at(1, "y0_gap") > t.at(2, "y0_gap"));
    }
}
