#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "kwlab/continuation.hpp"
#include "kwlab/mountain_pass.hpp"
#include "kwlab/solvers.hpp"

using namespace kw;
using kwtest::torus;

namespace {

// analytic sign-changing weight: any R with both signs feeds the shifted
// functional machinery directly, no PDE solve required
ScalarField analytic_r(const DomainPtr& dom) {
    return cosine_field(dom, 0.5, -0.1);
}

} // namespace

TEST_CASE("bump direction: mean zero, unit max, centered on the extremes") {
    auto dom = torus(32);
    ScalarField r = analytic_r(dom);
    ScalarField w0 = bump_direction(r, 0.1);

    REQUIRE(std::abs(integrate(w0)) < 1e-12);
    REQUIRE(field_max(w0) == Catch::Approx(1.0).margin(1e-14));
    REQUIRE(w0[argmax(r)] == Catch::Approx(1.0).margin(1e-12));
    // the negative bump avoids the positive region entirely
    REQUIRE(w0[argmin(r)] < 0.0);
}

TEST_CASE("bump direction needs both signs in the weight") {
    auto dom = torus(16);
    ScalarField neg(dom, -1.0);
    try {
        bump_direction(neg, 0.1);
        FAIL("expected a throw");
    } catch (const error& e) {
        REQUIRE(e.code() == errc::inadmissible);
    }
    ScalarField pos(dom, 1.0);
    REQUIRE_THROWS_AS(bump_direction(pos, 0.1), error);
}

TEST_CASE("descent scale is a power of two with J below -1, decreasing beyond") {
    auto dom = torus(32);
    ScalarField r = analytic_r(dom);
    ScalarField w0 = bump_direction(r, 0.1);
    const double t0 = find_descent_scale(r, w0);

    REQUIRE(shifted_energy(r, t0 * w0) < -1.0);
    const double log2t = std::log2(t0);
    REQUIRE(log2t == Catch::Approx(std::round(log2t)).margin(1e-12));
    // one halving back up crosses the level again (t0 is minimal)
    if (t0 > 1.0) REQUIRE(shifted_energy(r, 0.5 * t0 * w0) >= -1.0);
    // beyond t0 the functional keeps falling
    REQUIRE(shifted_energy(r, 2.0 * t0 * w0) < shifted_energy(r, t0 * w0));
    REQUIRE(shifted_energy(r, 4.0 * t0 * w0) < shifted_energy(r, 2.0 * t0 * w0));
}

TEST_CASE("path solve validates its inputs") {
    auto dom = torus(16);
    ScalarField r = analytic_r(dom);
    ScalarField w0 = bump_direction(r, 0.1);
    const double t0 = find_descent_scale(r, w0);

    MountainPassOptions o;
    o.nodes = 8;   // even
    REQUIRE_THROWS_AS(mountain_pass_solve(r, w0, t0, o), error);
    o.nodes = 7;   // too few
    REQUIRE_THROWS_AS(mountain_pass_solve(r, w0, t0, o), error);
    o.nodes = 21;
    REQUIRE_THROWS_AS(mountain_pass_solve(r, w0, -1.0, o), error);
    // an endpoint above the -1 level is rejected up front
    try {
        mountain_pass_solve(r, w0, 1e-6, o);
        FAIL("expected a throw");
    } catch (const error& e) {
        REQUIRE(e.code() == errc::invalid_argument);
    }
}

TEST_CASE("path relaxation finds a nonnegative-level critical point") {
    auto dom = torus(32);
    ScalarField r = analytic_r(dom);
    ScalarField w0 = bump_direction(r, 0.1);
    const double t0 = find_descent_scale(r, w0);

    MountainPassOptions o;
    o.relax_tol = 1e-4;
    MountainPassResult res = mountain_pass_solve(r, w0, t0, o);

    REQUIRE(res.converged);
    REQUIRE(res.level >= -1e-8);
    REQUIRE(res.peak_index > 0);
    REQUIRE(res.peak_index + 1 < res.path.size());
    // the polished point is a critical point of the shifted functional
    REQUIRE(shifted_residual_linf(r, res.u) <= 1e-10);

    // trace shape: the initial ray crest dominates the whole relaxation and
    // the last recorded crest is the polished level
    REQUIRE(!res.trace.empty());
    for (const TraceRow& row : res.trace)
        REQUIRE(row.j_peak <= res.trace.front().j_peak + 1e-6);
    REQUIRE(res.trace.back().j_peak ==
            Catch::Approx(res.level).margin(1e-6 * (1.0 + std::abs(res.level))));

    // endpoints stayed pinned
    REQUIRE(linf(res.path.front()) == 0.0);
    REQUIRE(linf(res.path.back() - t0 * w0) < 1e-12);
}

TEST_CASE("second solution machinery rejects nonpositive weights upstream") {
    auto dom = torus(16);
    ScalarField k(dom, -2.0);
    ProblemSpec spec(dom, k, -1.0);
    ScalarField u1(dom, 0.5 * std::log(0.5));
    // R = K e^{2 u1} <= 0: no crossing direction exists
    try {
        second_solution(spec, u1);
        FAIL("expected a throw");
    } catch (const error& e) {
        REQUIRE(e.code() == errc::inadmissible);
    }
}

TEST_CASE("second solution is distinct and sits at higher energy") {
    auto dom = torus(32);
    ScalarField u_star = cosine_field(dom, 0.3, 0.0);
    const double alpha = -0.5;
    ScalarField k = manufactured_weight(u_star, alpha);
    ProblemSpec spec(dom, k, alpha);

    // seed from the minimizing branch; a bare Newton run from zero lands on
    // whichever branch is nearest, and here that is the unstable one
    ContinuationOptions co;
    co.fill_lambda_min = false;
    SweepEntry entry = first_solution(dom, k, alpha, co);
    REQUIRE(entry.solvable);
    const SolutionRecord& first = *entry.record;
    REQUIRE(first.converged);

    MountainPassOptions o;
    o.relax_tol = 1e-4;
    SecondSolutionResult second = second_solution(spec, first.u, o);

    REQUIRE(second.record.converged);
    REQUIRE(second.record.method == "mountain-pass");
    REQUIRE(second.record.residual <= 1e-9);
    REQUIRE(linf(second.record.u - first.u) > o.distinct_tol);
    REQUIRE(second.record.energy_value > first.energy_value);
    REQUIRE(second.pass.level >= -1e-8);

    // the weight was built so that u_star solves the equation exactly, and
    // the pass recovers precisely that sibling solution
    REQUIRE(linf(second.record.u - u_star) < 1e-6);
}
