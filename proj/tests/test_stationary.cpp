#include "doctest.h"

#include <cmath>

#include "hj/contactflow.hpp"
#include "hj/model.hpp"
#include "hj/stationary.hpp"

using namespace hj;

namespace {

const double pi = two_pi / 2;

Model e1(double c, const PeriodicGrid& g) {
    return build_model(ModelSpec{.builtin = "e1", .c = c}, g);
}
Model e3(double c, const PeriodicGrid& g) {
    return build_model(ModelSpec{.builtin = "e3", .c = c}, g);
}

}  // namespace

TEST_CASE("starting constant dominates known solutions") {
    PeriodicGrid g = make_grid(128);
    Model m = e3(0.0, g);
    double above = starting_constant(m, g, +1);
    double below = starting_constant(m, g, -1);
    CHECK(above >= 2.1);  // known solutions range over [-2, 2]
    CHECK(below <= -2.1);
    CHECK(below == -above);
}

TEST_CASE("maximal solution of e3 at the critical value") {
    // the node error at the degenerate points is about 2 * spacing and the
    // overall error is first order, so the tight tolerances need this grid
    PeriodicGrid g = make_grid(1024);
    Model m = e3(0.0, g);
    SemigroupParams params = SemigroupParams::defaults(m, g);
    params.dt = g.spacing / 2;
    GridFunction u = compute_u_max(m, g, params, /*probe_maximality=*/true);

    // nonnegative, pinned at the degenerate points x = 0 and x = pi
    CHECK(u.min() >= -1e-6);
    CHECK(std::abs(interpolate(u, 0.0)) <= 2e-2);
    CHECK(std::abs(interpolate(u, pi)) <= 2e-2);

    // matches the independently integrated branch solution
    GridFunction oracle = shooting_oracle(g.n);
    CHECK(sup_diff(u, oracle) <= 5e-2);
}

TEST_CASE("blow-down of e1 below the critical value") {
    PeriodicGrid g = make_grid(256);
    Model m = e1(-0.5, g);
    SemigroupParams params = SemigroupParams::defaults(m, g);
    CHECK_THROWS_AS(compute_u_max(m, g, params), NoSolutionError);
}

TEST_CASE("multiplicity above the critical value for e1") {
    PeriodicGrid g = make_grid(256);
    Model m = e1(5.0, g);
    SemigroupParams params = SemigroupParams::defaults(m, g);
    StationaryPair pair = compute_u_min(m, g, params);
    CHECK(pair.gap > 0.1);
    // both limits are fixed points of the backward step; the minimal one
    // carries an irreducible O(dt * spacing) residual at the nodes nearest
    // the degenerate rest points
    CHECK(sup_diff(backward_step(pair.u_max, m, params), pair.u_max) <= 10 * params.tol_fix);
    CHECK(sup_diff(backward_step(pair.u_min, m, params), pair.u_min) <=
          2.0 * params.dt * g.spacing);
    // ordering
    for (int i = 0; i < g.n; ++i) CHECK(pair.u_min[i] <= pair.u_max[i] + 1e-9);
}

TEST_CASE("uniqueness at the critical value for e3") {
    PeriodicGrid g = make_grid(256);
    Model m = e3(0.0, g);
    SemigroupParams params = SemigroupParams::defaults(m, g);
    // at criticality the quasi-stationary band around the merged solution is
    // as wide as the acceptance residual allows, which scales with dt
    params.dt = g.spacing / 2;
    StationaryPair pair = compute_u_min(m, g, params);
    CHECK(pair.gap <= 5e-2);
}

TEST_CASE("bisection brackets the critical value of e1") {
    PeriodicGrid g = make_grid(256);
    C0Estimate est = estimate_c0(e1(0.0, g), g, -1.0, 1.0, 12);
    CHECK(est.lo < est.hi);
    CHECK(est.hi - est.lo <= 2.0 / (1 << 12) + 1e-12);
    CHECK(std::abs(est.mid()) <= 0.05);
    CHECK(est.monotone);
    CHECK(est.iterations == 12);
}

TEST_CASE("bisection tracks an additive shift of the source term") {
    // replacing c by c - 1 shifts the critical value by exactly -1
    PeriodicGrid g = make_grid(128);
    ModelSpec spec{.builtin = "e1", .c = 0.0};
    Model shifted = build_model(spec, g);
    auto ham = shifted.hamiltonian;
    shifted.hamiltonian = [ham](double x, double p) { return ham(x, p) + 1.0; };
    C0Estimate est = estimate_c0(shifted, g, 0.0, 2.0, 8);
    CHECK(std::abs(est.mid() - 1.0) <= 0.1);
}

TEST_CASE("bisection rejects an invalid bracket") {
    PeriodicGrid g = make_grid(128);
    // both endpoints above the critical value: bracket verification must fail
    CHECK_THROWS(estimate_c0(e1(0.0, g), g, 0.5, 1.0, 4));
}

TEST_CASE("inf-sup bound for the builtins") {
    PeriodicGrid g = make_grid(256);
    // for both builtins the critical value is 0 and u = 0 is a subsolution,
    // so the descent must certify a bound near 0 (and never below)
    for (const Model& m : {e1(0.0, g), e3(0.0, g)}) {
        double bound = estimate_c0_infsup(m, g);
        CHECK(bound <= 0.05);
        CHECK(bound >= -1e-9);
    }
}

TEST_CASE("aubry set of e3 holds the degenerate points") {
    PeriodicGrid g = make_grid(512);
    Model m = e3(0.0, g);
    SemigroupParams params = SemigroupParams::defaults(m, g);
    GridFunction u_max = compute_u_max(m, g, params);
    GridFunction u_plus = compute_conjugate(u_max, m, params);
    // the contact gap at the degenerate points is about 4 * spacing (both
    // members carry a 2 * spacing node error of opposite sign)
    std::vector<int> aubry = compute_aubry_set(u_max, u_plus, 6.0 * g.spacing);
    CHECK_FALSE(aubry.empty());
    auto contains = [&](int idx) {
        return std::find(aubry.begin(), aubry.end(), idx) != aubry.end();
    };
    CHECK(contains(0));        // node nearest x = 0
    CHECK(contains(g.n / 2));  // node nearest x = pi
}

TEST_CASE("aubry set selection is a plain threshold") {
    PeriodicGrid g = make_grid(8);
    GridFunction a = GridFunction::constant(g, 1.0);
    GridFunction b = GridFunction::constant(g, 1.0);
    b[3] = 2.0;
    std::vector<int> idx = compute_aubry_set(a, b, 0.5);
    REQUIRE(idx.size() == 7);
    for (int i : idx) CHECK(i != 3);
}
