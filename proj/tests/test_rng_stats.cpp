#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/rng.hpp"
#include "core/stats.hpp"
#include "core/table.hpp"

using namespace scalimit;

TEST_CASE("counter rng reproducibility and stream independence") {
    CounterRng a(42, 7), b(42, 7), c(42, 8);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    int same = 0;
    CounterRng a2(42, 7);
    for (int i = 0; i < 100; ++i) same += a2.next_u64() == c.next_u64();
    CHECK(same == 0);
}

TEST_CASE("uniform and normal moments") {
    CounterRng rng(1);
    const int n = 200000;
    double su = 0, su2 = 0, sn = 0, sn2 = 0, sn4 = 0;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        CHECK(u > 0);
        CHECK(u < 1);
        su += u;
        su2 += u * u;
        double z = rng.normal();
        sn += z;
        sn2 += z * z;
        sn4 += z * z * z * z;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(su2 / n == doctest::Approx(1.0 / 3).epsilon(0.01));
    CHECK(sn / n == doctest::Approx(0.0).scale(1).epsilon(0.01));
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(sn4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("poisson and gamma samplers match their moments") {
    CounterRng rng(2);
    for (double lambda : {0.5, 8.0, 120.0, 3000.0}) {
        const int n = 40000;
        double s = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            double v = static_cast<double>(rng.poisson(lambda));
            s += v;
            s2 += v * v;
        }
        double mean = s / n, var = s2 / n - mean * mean;
        CHECK(mean == doctest::Approx(lambda).epsilon(0.02));
        CHECK(var == doctest::Approx(lambda).epsilon(0.06));
    }
    for (double shape : {0.7, 3.0, 250.0}) {
        const int n = 40000;
        double s = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            double v = rng.gamma(shape, 2.0);
            s += v;
            s2 += v * v;
        }
        double mean = s / n, var = s2 / n - mean * mean;
        CHECK(mean == doctest::Approx(2 * shape).epsilon(0.03));
        CHECK(var == doctest::Approx(4 * shape).epsilon(0.08));
    }
}

TEST_CASE("ks statistic") {
    std::vector<double> a = {1, 2, 3, 4, 5};
    CHECK(ks_statistic(a, a) == 0.0);
    std::vector<double> b = {10, 11, 12};
    CHECK(ks_statistic(a, b) == 1.0);
    CHECK_THROWS_AS(ks_statistic(a, std::vector<double>{}), domain_error);

    // two same-law samples stay below the 1% critical value 1.63 sqrt(2/n)
    const std::size_t n = 10000;
    std::vector<double> s1(n), s2(n);
    CounterRng r1(5, 0), r2(5, 1);
    for (std::size_t i = 0; i < n; ++i) {
        s1[i] = r1.normal();
        s2[i] = r2.normal();
    }
    CHECK(ks_statistic(s1, s2) < 1.63 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("wasserstein1") {
    std::vector<double> a = {0.0, 1.0, 2.0, 5.0};
    CHECK(wasserstein1(a, a) == 0.0);
    std::vector<double> shifted;
    for (double v : a) shifted.push_back(v + 0.75);
    CHECK(wasserstein1(a, shifted) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK_THROWS_AS(wasserstein1(a, std::vector<double>{}), domain_error);

    const std::size_t n = 100000;
    std::vector<double> s1(n), s2(n);
    CounterRng r1(6, 0), r2(6, 1);
    for (std::size_t i = 0; i < n; ++i) {
        s1[i] = r1.normal();
        s2[i] = r2.normal();
    }
    CHECK(wasserstein1(s1, s2) < 0.02);
}

TEST_CASE("mc stat") {
    std::vector<double> xs = {1, 2, 3, 4};
    McStat s = mc_stat(xs);
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.var == doctest::Approx(5.0 / 3));
    CHECK(s.n == 4);
}

TEST_CASE("experiment table csv") {
    ExperimentTable t({"K", "value", "value_se"});
    t.add_row({4, 1.5, 0.25});
    t.add_row({8, 1.25, 0.125});
    std::string csv = t.to_csv();
    CHECK(csv.find("K,value,value_se\r\n") == 0);
    CHECK(csv.find("4,1.5,0.25\r\n") != std::string::npos);
    CHECK(t.at(1, "value") == 1.25);
    CHECK(t.column("K") == std::vector<double>{4, 8});
    CHECK_THROWS_AS(t.add_row({1.0}), config_error);
    CHECK_THROWS_AS(t.at(0, "nope"), config_error);
    CHECK(content_digest("abc") == content_digest("abc"));
    CHECK(content_digest("abc") != content_digest("abd"));
}
