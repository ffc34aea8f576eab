#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>

#include "hj/model.hpp"

using namespace hj;

namespace {

ModelSpec builtin_spec(const std::string& name, double c) {
    ModelSpec s;
    s.builtin = name;
    s.c = c;
    return s;
}

// independent conjugate: brute-force sup over a very dense p-grid
double brute_legendre(const std::function<double(double, double)>& H, double x, double v,
                      double pmax, int np) {
    double best = -1e300;
    for (int k = 0; k < np; ++k) {
        double p = -pmax + 2.0 * pmax * k / (np - 1);
        best = std::max(best, v * p - H(x, p));
    }
    return best;
}

}  // namespace

TEST_CASE("builtin models") {
    PeriodicGrid g = make_grid(128);
    Model e1 = build_model(builtin_spec("e1", 0.0), g);
    CHECK(e1.hamiltonian(0.3, 2.0) == doctest::Approx(2.0));
    CHECK(e1.discount(two_pi / 4) == doctest::Approx(1.0));
    CHECK(e1.lambda_max == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(e1.lambda_sign_change);

    Model e3 = build_model(builtin_spec("e3", 0.0), g);
    CHECK(e3.hamiltonian(0.0, 1.0) == doctest::Approx(0.5));
    CHECK(e3.hamiltonian(two_pi / 4, 0.0) == doctest::Approx(-2.0));
    CHECK(e3.lambda_max == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(e3.lambda_sign_change);

    CHECK_THROWS_AS(build_model(builtin_spec("e9", 0.0), g), std::invalid_argument);
}

TEST_CASE("custom model without sign change") {
    PeriodicGrid g = make_grid(64);
    ModelSpec s;
    s.hamiltonian = [](double, double p) { return 0.5 * p * p; };
    s.discount = [](double) { return 0.0; };
    Model m = build_model(s, g);
    CHECK_FALSE(m.lambda_sign_change);
    CHECK(m.lambda_max == 0.0);
}

TEST_CASE("non-convex hamiltonian rejected") {
    PeriodicGrid g = make_grid(64);
    ModelSpec s;
    s.hamiltonian = [](double, double p) { return -p * p; };
    s.discount = [](double x) { return std::sin(x); };
    CHECK_THROWS_AS(build_model(s, g), std::runtime_error);
}

TEST_CASE("model spec file parsing") {
    std::string path = "test_model_spec.txt";
    {
        std::ofstream out(path);
        out << "builtin = e3\n" << "c = 0.25\n" << "p_max = 6\n" << "n_velocities: 65\n";
    }
    ModelSpec s = ModelSpec::from_file(path);
    CHECK(s.builtin == "e3");
    CHECK(s.c == doctest::Approx(0.25));
    CHECK(s.p_max == doctest::Approx(6.0));
    CHECK(s.n_velocities == 65);
    std::remove(path.c_str());
}

TEST_CASE("legendre transform of quadratic hamiltonian") {
    PeriodicGrid g = make_grid(16);
    Model e1 = build_model(builtin_spec("e1", 0.0), g);
    LagrangianTable t = legendre_transform(e1, g, 129);
    CHECK_FALSE(t.boundary_argmax);
    // L(x, 2) = 2 and L(x, 0) = 0 for H = p^2/2
    CHECK(t.eval(3, 2.0) == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(t.eval(3, 0.0) == doctest::Approx(0.0));
    CHECK(t.eval(7, 0.0) == 0.0);
}

TEST_CASE("legendre transform of quartic hamiltonian vs brute force") {
    PeriodicGrid g = make_grid(8);
    ModelSpec s;
    s.hamiltonian = [](double, double p) { return 0.25 * p * p * p * p; };
    s.discount = [](double x) { return std::sin(x); };
    Model m = build_model(s, g);
    LagrangianTable t = legendre_transform(m, g, 129);
    // analytic value 3/4 at v = 1, cross-checked against a 1e5-point scan
    double oracle = brute_legendre(m.hamiltonian, 0.0, 1.0, 10.0, 100000);
    CHECK(oracle == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(t.eval(0, 1.0) == doctest::Approx(0.75).epsilon(2e-3));
}

TEST_CASE("legendre boundary-argmax diagnostic") {
    PeriodicGrid g = make_grid(8);
    ModelSpec s;
    s.hamiltonian = [](double, double p) { return 0.5 * p * p; };
    s.discount = [](double x) { return std::sin(x); };
    s.p_max = 2.0;  // argmax for |v| > 2 sits on the boundary
    Model m = build_model(s, g);
    LagrangianTable t = legendre_transform(m, g, 129);
    CHECK(t.boundary_argmax);
    CHECK_THROWS_AS(legendre_transform(m, g, 129, 2049, /*strict=*/true), std::runtime_error);
}

TEST_CASE("fenchel-young over sampled triples") {
    PeriodicGrid g = make_grid(32);
    Model e3 = build_model(builtin_spec("e3", 0.0), g);
    LagrangianTable t = legendre_transform(e3, g, 129);
    std::vector<double> ps = symmetric_samples(e3.p_range.hi, 2049);
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        int i = static_cast<int>(rng() % static_cast<unsigned>(g.n));
        int j = static_cast<int>(rng() % static_cast<unsigned>(t.m()));
        int k = static_cast<int>(rng() % ps.size());
        double x = g.node(i), v = t.velocities[static_cast<size_t>(j)], p = ps[static_cast<size_t>(k)];
        CHECK(t.at(i, j) + e3.hamiltonian(x, p) >= v * p - 1e-6);
    }
    // duality gap along the sampled p-grid
    for (int trial = 0; trial < 100; ++trial) {
        int i = static_cast<int>(rng() % static_cast<unsigned>(g.n));
        int j = static_cast<int>(rng() % static_cast<unsigned>(t.m()));
        double x = g.node(i), v = t.velocities[static_cast<size_t>(j)];
        double gap = 1e300;
        for (double p : ps) gap = std::min(gap, t.at(i, j) + e3.hamiltonian(x, p) - v * p);
        CHECK(gap >= -1e-12);
        CHECK(gap <= 1e-6);
    }
}

TEST_CASE("legendre additive shift") {
    PeriodicGrid g = make_grid(16);
    Model e3 = build_model(builtin_spec("e3", 0.0), g);
    const double a = 0.73;
    Model shifted = e3;
    auto base = e3.hamiltonian;
    shifted.hamiltonian = [base, a](double x, double p) { return base(x, p) + a; };
    LagrangianTable t0 = legendre_transform(e3, g, 65);
    LagrangianTable t1 = legendre_transform(shifted, g, 65);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < t0.m(); ++j)
            CHECK(t1.at(i, j) == doctest::Approx(t0.at(i, j) - a).epsilon(1e-13));
}

TEST_CASE("lagrangian table convex in v") {
    PeriodicGrid g = make_grid(32);
    Model e3 = build_model(builtin_spec("e3", 0.0), g);
    LagrangianTable t = legendre_transform(e3, g, 129);
    for (int i = 0; i < g.n; ++i)
        for (int j = 1; j + 1 < t.m(); ++j)
            CHECK(t.at(i, j - 1) - 2 * t.at(i, j) + t.at(i, j + 1) >= -1e-9);
}

TEST_CASE("subsolution residual on builtin examples") {
    PeriodicGrid g = make_grid(256);
    GridFunction zero = GridFunction::constant(g, 0.0);

    Model e3 = build_model(builtin_spec("e3", 0.0), g);
    GridFunction r3 = subsolution_residual(zero, e3);
    for (int i = 0; i < g.n; ++i) {
        CHECK(r3[i] <= 1e-12);
        CHECK(r3[i] == doctest::Approx(std::cos(2 * g.node(i)) - 1.0).epsilon(1e-12));
    }

    Model e1 = build_model(builtin_spec("e1", 0.0), g);
    GridFunction r1 = subsolution_residual(zero, e1);
    for (int i = 0; i < g.n; ++i) CHECK(r1[i] == 0.0);
}

TEST_CASE("subsolution residual additive shift") {
    PeriodicGrid g = make_grid(64);
    Model e1 = build_model(builtin_spec("e1", 0.3), g);
    GridFunction u = GridFunction::sample(g, [](double x) { return std::sin(2 * x); });
    const double a = 1.5;
    GridFunction ua = u;
    for (int i = 0; i < g.n; ++i) ua[i] += a;
    GridFunction r0 = subsolution_residual(u, e1);
    GridFunction r1 = subsolution_residual(ua, e1);
    for (int i = 0; i < g.n; ++i)
        CHECK(r1[i] - r0[i] ==
              doctest::Approx(e1.discount(g.node(i)) * a).epsilon(1e-9).scale(1.0));
}
