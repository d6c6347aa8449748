#include <catch2/catch_amalgamated.hpp>

#include "bequest/dual.hpp"
#include "bequest/rootfind.hpp"
#include "oracles.hpp"

using bequest::derive_constants;
using bequest::DualFunction;
using bequest::FreeBoundaries;
using bequest::ModelParams;
using bequest::Regime;
using bequest::solve_boundaries;
using bequest::solve_zb0;

namespace {

const ModelParams kLow(0.08, 0.04, 0.2, 0.04, 0.02, 1.0);
const ModelParams kHigh(0.08, 0.04, 0.2, 0.04, 0.06, 1.0);

// Residual of the linear ODE the dual must satisfy on its solved domain.
double ode_residual(const ModelParams& p, const DualFunction& dual, double z) {
    const auto k = dual.constants();
    const auto e = dual.eval(z);
    const double source =
        k.regime == Regime::HighConsumption && z <= dual.boundaries().z_b ? p.lambda : 0.0;
    return p.lambda * e.value - (p.lambda - p.r) * z * e.slope - k.m * dual.scaled_curvature(z) +
           p.c * z - source;
}

}  // namespace

TEST_CASE("boundary ratio matches an independent bisection oracle", "[dual]") {
    // For these parameters the exponents are 2 and -1 and the boundary
    // equation reduces to the cubic 4 z^3 + 3 z^2 - 1 = 0 on (0,1).
    const double oracle =
        oracles::bisect([](double z) { return 4.0 * z * z * z + 3.0 * z * z - 1.0; }, 0.0, 1.0);
    const auto k = derive_constants(kLow);
    const double zb0 = solve_zb0(kLow, k);
    CHECK(zb0 == Catch::Approx(oracle).margin(1e-12));
    CHECK(zb0 == Catch::Approx(0.45541004110102846721).margin(1e-13));
    CHECK(zb0 > 0.0);
    CHECK(zb0 < 1.0);
}

TEST_CASE("boundaries in the low-consumption regime", "[dual]") {
    const auto k = derive_constants(kLow);
    const auto fb = solve_boundaries(kLow, k);
    // frozen from the boundary formulas evaluated at the oracle root
    CHECK(fb.z_b == Catch::Approx(0.68709159052076664199).margin(1e-12));
    CHECK(fb.z_0 == Catch::Approx(1.50873175492488051084).margin(1e-12));
    CHECK(fb.z_b == Catch::Approx(fb.z_b0 * fb.z_0).margin(1e-14));
    // the goal reciprocal must separate the boundaries
    CHECK(fb.z_b < 1.0 / kLow.b);
    CHECK(1.0 / kLow.b < fb.z_0);
}

TEST_CASE("boundaries in the high-consumption regime", "[dual]") {
    const auto k = derive_constants(kHigh);
    const auto fb = solve_boundaries(kHigh, k);
    // boundary equation reduces to 4 z^3 - z^2 - 1 = 0 here
    const double oracle = oracles::bisect(
        [](double z) { return 4.0 * z * z * z - z * z - 1.0; }, 0.0, 1.0);
    CHECK(fb.z_b0 == Catch::Approx(oracle).margin(1e-12));
    CHECK(fb.z_0 == Catch::Approx(0.96702678009604619897).margin(1e-12));
    CHECK(fb.z_b == Catch::Approx(0.70135559506719516979).margin(1e-12));
    CHECK(0.0 < fb.z_b);
    CHECK(fb.z_b < fb.z_0);
}

TEST_CASE("boundary ratio limits in consumption and goal", "[dual]") {
    // as c -> 0 the ratio collapses to 0
    double prev = 1.0;
    for (double c : {1e-2, 1e-4, 1e-6, 1e-8}) {
        const ModelParams p(0.08, 0.04, 0.2, 0.04, c, 1.0);
        const double zb0 = solve_zb0(p, derive_constants(p));
        CHECK(zb0 < prev);
        prev = zb0;
    }
    CHECK(prev < 1e-3);

    // as b -> 0 with c > r*b the ratio approaches 1
    double prev_b = 0.0;
    for (double b : {1e-2, 1e-4, 1e-6, 1e-8}) {
        const ModelParams p(0.08, 0.04, 0.2, 0.04, 0.06, b);
        const double zb0 = solve_zb0(p, derive_constants(p));
        CHECK(zb0 > prev_b);
        prev_b = zb0;
    }
    CHECK(prev_b > 1.0 - 1e-6);
}

TEST_CASE("solve_zb0 demands positive consumption", "[dual]") {
    const ModelParams p(0.08, 0.04, 0.2, 0.04, 0.0, 1.0);
    CHECK_THROWS_AS(solve_zb0(p, derive_constants(p)), bequest::RegimeError);
}

TEST_CASE("solve_increasing rejects brackets that do not straddle", "[dual]") {
    CHECK_THROWS_AS(
        bequest::solve_increasing([](double x) { return x + 10.0; }, 0.0, 1.0),
        bequest::NoBracket);
}

TEST_CASE("dual values and extensions in the low regime", "[dual]") {
    const auto k = derive_constants(kLow);
    const auto fb = solve_boundaries(kLow, k);
    const DualFunction dual(kLow, k, fb);

    const auto at_z0 = dual.eval(fb.z_0);
    CHECK(std::abs(at_z0.value) < 1e-14);
    CHECK(std::abs(at_z0.slope) < 1e-14);
    CHECK(at_z0.curvature() > 0.0);

    const auto at_zb = dual.eval(fb.z_b);
    CHECK(at_zb.value == Catch::Approx(1.0 - kLow.b * fb.z_b).margin(1e-12));
    CHECK(at_zb.value == Catch::Approx(0.31290840947923335801).margin(1e-12));
    CHECK(at_zb.slope == Catch::Approx(-kLow.b).margin(1e-12));

    // stopped extensions outside the continuation region
    const auto below = dual.eval(0.5 * fb.z_b);
    CHECK(below.value == Catch::Approx(1.0 - kLow.b * 0.5 * fb.z_b).margin(1e-15));
    CHECK(below.slope == -kLow.b);
    CHECK(below.curvature() == 0.0);
    const auto above = dual.eval(2.0 * fb.z_0);
    CHECK(above.value == 0.0);
    CHECK(above.slope == 0.0);

    CHECK_THROWS_AS(dual.eval(-1e-12), bequest::DomainError);
}

TEST_CASE("dual values at the origin and kink in the high regime", "[dual]") {
    const auto k = derive_constants(kHigh);
    const auto fb = solve_boundaries(kHigh, k);
    const DualFunction dual(kHigh, k, fb);

    const auto at0 = dual.eval(0.0);
    CHECK(at0.value == 1.0);
    CHECK(at0.slope == Catch::Approx(-kHigh.c / kHigh.r).margin(1e-15));

    // C^1 pasting across the transition boundary, with distinct one-sided
    // second derivatives
    const auto at_zb = dual.eval(fb.z_b);
    const auto just_below = dual.eval(fb.z_b * (1.0 - 1e-9));
    CHECK(at_zb.value == Catch::Approx(just_below.value).margin(1e-9));
    CHECK(at_zb.slope == Catch::Approx(just_below.slope).margin(1e-7));
    CHECK(at_zb.slope == Catch::Approx(-kHigh.b).margin(1e-12));
    CHECK(at_zb.curvature_left != at_zb.curvature_right);
    CHECK(at_zb.curvature_left > 0.0);
    CHECK(at_zb.curvature_right > 0.0);
}

TEST_CASE("smooth pasting, shape and ODE residual over random draws", "[dual]") {
    oracles::ParamSampler sampler(0xd0a1u);
    for (int i = 0; i < 25; ++i) {
        for (Regime regime : {Regime::LowConsumption, Regime::HighConsumption}) {
            const auto p = sampler.draw(regime);
            const auto k = derive_constants(p);
            const auto fb = solve_boundaries(p, k);
            const DualFunction dual(p, k, fb);
            INFO("mu=" << p.mu << " r=" << p.r << " sigma=" << p.sigma << " lambda=" << p.lambda
                       << " c=" << p.c << " b=" << p.b);

            // pasting at both boundaries
            const auto at_zb = dual.eval(fb.z_b);
            const auto at_z0 = dual.eval(fb.z_0);
            if (regime == Regime::LowConsumption)
                REQUIRE(std::abs(at_zb.value - (1.0 - p.b * fb.z_b)) < 1e-10);
            REQUIRE(std::abs(at_zb.slope + p.b) < 1e-10);
            REQUIRE(std::abs(at_z0.value) < 1e-10);
            REQUIRE(std::abs(at_z0.slope) < 1e-10);

            // interval inequalities that place 1/b between the boundaries
            if (regime == Regime::LowConsumption) {
                REQUIRE(fb.z_b < 1.0 / p.b);
                REQUIRE(fb.z_0 > 1.0 / p.b);
            }

            // decreasing, convex, and ODE-consistent on the interior
            const double lo = dual.domain_lo(), hi = dual.domain_hi();
            for (int j = 1; j < 1000; ++j) {
                const double z = lo + (hi - lo) * j / 1000.0;
                if (regime == Regime::HighConsumption &&
                    std::abs(z - fb.z_b) < 1e-9 * (hi - lo))
                    continue;
                const auto e = dual.eval(z);
                REQUIRE(e.slope <= 1e-15);
                REQUIRE(e.curvature() > 0.0);
                REQUIRE(std::abs(ode_residual(p, dual, z)) < 1e-8);
            }

            // scaled curvature agrees with z^2 v'' where both are finite
            const double z_mid = 0.5 * (fb.z_b + fb.z_0);
            const auto mid = dual.eval(z_mid);
            REQUIRE(dual.scaled_curvature(z_mid) ==
                    Catch::Approx(z_mid * z_mid * mid.curvature()).epsilon(1e-10));
        }
    }
}

TEST_CASE("slope inversion round-trips through the dual", "[dual]") {
    for (const ModelParams& p : {kLow, kHigh}) {
        const auto k = derive_constants(p);
        const auto fb = solve_boundaries(p, k);
        const DualFunction dual(p, k, fb);
        CHECK(dual.invert_slope(0.0) == fb.z_0);
        CHECK(dual.invert_slope(p.b) == fb.z_b);
        for (int i = 1; i < 50; ++i) {
            const double w = p.b * i / 50.0;
            const double z = dual.invert_slope(w);
            REQUIRE(z >= fb.z_b);
            REQUIRE(z <= fb.z_0);
            REQUIRE(std::abs(dual.eval(z).slope + w) < 1e-12);
        }
        CHECK_THROWS_AS(dual.invert_slope(-0.1), bequest::DomainError);
        CHECK_THROWS_AS(dual.invert_slope(p.b * 1.5), bequest::DomainError);
    }
}
