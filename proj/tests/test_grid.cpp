#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>

#include "hj/grid.hpp"

using namespace hj;

TEST_CASE("make_grid spacing") {
    PeriodicGrid g = make_grid(8, two_pi);
    CHECK(g.spacing == doctest::Approx(two_pi / 8).epsilon(1e-15));
    PeriodicGrid g2 = make_grid(512, two_pi);
    CHECK(g2.spacing == doctest::Approx(two_pi / 512).epsilon(1e-15));
    CHECK(g2.spacing * g2.n == doctest::Approx(two_pi).epsilon(1e-15));
}

TEST_CASE("make_grid rejects bad input") {
    CHECK_THROWS_WITH_AS(make_grid(3, two_pi), doctest::Contains("too coarse"),
                         std::invalid_argument);
    CHECK_THROWS_AS(make_grid(8, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(8, -1.0), std::invalid_argument);
}

TEST_CASE("grid function rejects non-finite values") {
    PeriodicGrid g = make_grid(4);
    CHECK_THROWS_AS(GridFunction(g, {0.0, 1.0, std::nan(""), 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(GridFunction(g, {0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("interpolate exact at nodes") {
    PeriodicGrid g = make_grid(16);
    GridFunction f = GridFunction::sample(g, [](double x) { return std::sin(x); });
    for (int i = 0; i < g.n; ++i) CHECK(interpolate(f, g.node(i)) == f[i]);
}

TEST_CASE("interpolate midpoint average") {
    PeriodicGrid g = make_grid(8);
    GridFunction f = GridFunction::sample(g, [](double x) { return 3.0 * x; });
    double mid = 0.5 * (g.node(2) + g.node(3));
    CHECK(interpolate(f, mid) == doctest::Approx(0.5 * (f[2] + f[3])).epsilon(1e-14));
}

TEST_CASE("interpolate periodic wrap") {
    PeriodicGrid g = make_grid(32);
    GridFunction f = GridFunction::sample(g, [](double x) { return std::cos(3.0 * x); });
    CHECK(interpolate(f, g.period + 0.1) == doctest::Approx(interpolate(f, 0.1)).epsilon(1e-13));
    CHECK(interpolate(f, -0.3) == doctest::Approx(interpolate(f, g.period - 0.3)).epsilon(1e-12));
}

TEST_CASE("sup_diff basics") {
    PeriodicGrid g = make_grid(4);
    GridFunction f(g, {0.0, 2.0, -3.0, 0.0});
    GridFunction z = GridFunction::constant(g, 0.0);
    CHECK(sup_diff(f, f) == 0.0);
    CHECK(sup_diff(GridFunction::constant(g, 1.0), z) == 1.0);
    CHECK(sup_diff(f, z) == 3.0);
    CHECK_THROWS_AS(sup_diff(f, GridFunction::constant(make_grid(8), 0.0)),
                    std::invalid_argument);
}

TEST_CASE("interpolation invariants, randomized") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> val(-5.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 4 + static_cast<int>(rng() % 60);
        PeriodicGrid g = make_grid(n);
        std::vector<double> a(static_cast<size_t>(n)), b(static_cast<size_t>(n));
        for (auto& v : a) v = val(rng);
        for (auto& v : b) v = val(rng);
        GridFunction f(g, a), h(g, b);
        double d = sup_diff(f, h);
        std::uniform_real_distribution<double> xs(-two_pi, 2 * two_pi);
        for (int q = 0; q < 20; ++q) {
            double x = xs(rng);
            // 1-Lipschitz with respect to sup-norm perturbation of values
            CHECK(std::abs(interpolate(f, x) - interpolate(h, x)) <= d + 1e-12);
            // no overshoot
            double v = interpolate(f, x);
            CHECK(v >= f.min() - 1e-12);
            CHECK(v <= f.max() + 1e-12);
            // periodicity
            CHECK(interpolate(f, x + g.period) == doctest::Approx(interpolate(f, x)).epsilon(1e-12));
        }
    }
}

TEST_CASE("csv round trip") {
    PeriodicGrid g = make_grid(64);
    GridFunction f = GridFunction::sample(g, [](double x) { return std::sin(x) + 0.25 * x; });
    std::string path = "test_grid_roundtrip.csv";
    write_csv(path, f);
    GridFunction back = read_csv(path);
    REQUIRE(back.size() == f.size());
    CHECK(sup_diff(f, back) <= 1e-11);
    std::remove(path.c_str());
}
