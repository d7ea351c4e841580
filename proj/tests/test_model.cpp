#include "doctest.h"

#include <cmath>
#include <vector>

#include "core/model.hpp"
#include "core/rng.hpp"

using namespace scalimit;

TEST_CASE("birth and death intensities on the linear model") {
    PopulationModel m = PopulationModel::linear(0.2, 0.1, 0.3);
    CHECK(birth_intensity(m, 2, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(death_intensity(m, 2, 1) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(birth_intensity(m, 1, 50) == doctest::Approx(17.5).epsilon(1e-15));
    CHECK(death_intensity(m, 1, 50) == doctest::Approx(12.5).epsilon(1e-15));
    CHECK(birth_intensity(m, 7, 0) == 0.0);
    CHECK(death_intensity(m, 7, 0) == 0.0);
    CHECK_THROWS_AS(birth_intensity(m, 2, -1), domain_error);
    CHECK_THROWS_AS(birth_intensity(m, 0, 1), domain_error);
    CHECK_THROWS_AS(death_intensity(m, -2, 1), domain_error);
}

TEST_CASE("net drift") {
    PopulationModel m = PopulationModel::linear(0.2, 0.1, 0.3);
    CHECK(net_drift(m, 50) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(net_drift(m, 0) == 0.0);
    PopulationModel sym = PopulationModel::linear(0.4, 0.4, 0.1);
    for (double x : {0.3, 1.0, 17.0}) CHECK(net_drift(sym, x) == 0.0);
}

TEST_CASE("intensity identities on random tuples") {
    CounterRng rng(99);
    PopulationModel m = PopulationModel::linear(0.2, 0.1, 0.3);
    for (int i = 0; i < 200; ++i) {
        double K = rng.uniform(0.5, 64);
        double x = rng.uniform(0, 80);
        double lb = birth_intensity(m, K, x), ld = death_intensity(m, K, x);
        CHECK(lb >= 0);
        CHECK(ld >= 0);
        // sigma^2 K^2/2 terms cancel exactly
        CHECK(lb - ld == doctest::Approx(K * net_drift(m, x)).epsilon(1e-12));
        // (lambda_b + lambda_d)/K^2 -> sigma^2(x) at rate (nu+mu)x/K
        CHECK(std::abs((lb + ld) / (K * K) - m.sigma2(x)) <=
              (m.nu() + m.mu()) * x / K + 1e-12);
    }
}

TEST_CASE("model validation") {
    std::vector<double> grid;
    for (double x = 0; x <= 100.0; x += 0.1) grid.push_back(x);

    PopulationModel lin = PopulationModel::linear(0.2, 0.1, 0.3);
    CHECK(validate_model(lin, grid).ok());

    std::vector<double> short_grid;
    for (double x = 0; x <= 10.0; x += 0.05) short_grid.push_back(x);
    PopulationModel quad = PopulationModel::custom(
        [](double x) { return x * x; }, [](double x) { return 0.5 * x; },
        [](double x) { return x; }, 1.0, 0.5, 1.0, 1.0);
    ValidationReport rep = validate_model(quad, short_grid);
    CHECK_FALSE(rep.ok());
    bool found_above_one = false;
    for (const auto& v : rep.violations)
        if (v.what.find("f^b") != std::string::npos) {
            CHECK(v.x > 1.0);
            found_above_one = true;
        }
    CHECK(found_above_one);

    PopulationModel flat_sigma = PopulationModel::custom(
        [](double x) { return 0.1 * x; }, [](double x) { return 0.1 * x; },
        [](double) { return 0.0; }, 0.1, 0.1, 1.0, 0.5);
    ValidationReport rep2 = validate_model(flat_sigma, short_grid);
    CHECK_FALSE(rep2.ok());

    CHECK_THROWS_AS(validate_model(lin, std::vector<double>{}), domain_error);
}

TEST_CASE("model construction errors") {
    CHECK_THROWS_AS(PopulationModel::linear(-0.1, 0.1, 0.3), domain_error);
    CHECK_THROWS_AS(PopulationModel::custom([](double) { return std::nan(""); },
                                            [](double x) { return x; },
                                            [](double x) { return x; }, 1, 1, 1, 1),
                    numeric_error);
}

TEST_CASE("scaling context rounding") {
    ScalingContext ctx(16, 50.0, 0.1);
    CHECK(ctx.initial_count() == 800);
    CHECK(ctx.x0_lattice() == doctest::Approx(50.0));
    ScalingContext odd(3, 0.4, 1.0);
    CHECK(odd.initial_count() == 1);  // round(1.2)
    CHECK_THROWS_AS(ScalingContext(0, 1, 1), domain_error);
    CHECK_THROWS_AS(ScalingContext(1, -1, 1), domain_error);
    CHECK_THROWS_AS(ScalingContext(1, 1, 0), domain_error);
}
