#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "bequest/mc.hpp"  // interior_grid, hjb_residual
#include "bequest/solve.hpp"
#include "oracles.hpp"

using bequest::derive_constants;
using bequest::ModelParams;
using bequest::Regime;
using bequest::Solution;

namespace {

const ModelParams kZero(0.08, 0.04, 0.2, 0.04, 0.0, 1.0);
const ModelParams kLow(0.08, 0.04, 0.2, 0.04, 0.02, 1.0);
const ModelParams kHigh(0.08, 0.04, 0.2, 0.04, 0.06, 1.0);

// Smallest value of v(z) + w z over a fine grid of the dual domain; test-side
// Legendre oracle, independent of the slope inversion.
double legendre_min(const bequest::DualFunction& dual, double w, int n = 40000) {
    const double lo = dual.domain_lo(), hi = dual.domain_hi();
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
        const double z = lo + (hi - lo) * i / static_cast<double>(n);
        best = std::min(best, dual.value(z) + w * z);
    }
    return best;
}

}  // namespace

TEST_CASE("zero consumption closed form", "[solve]") {
    const auto sol = Solution::solve(kZero);
    CHECK(!sol.boundaries());
    CHECK(sol.dual() == nullptr);
    // q = 1/2 here, so phi(1/4) = 1/2 and pi*(w) = 2w
    CHECK(sol.phi(0.25) == Catch::Approx(0.5).margin(1e-12));
    CHECK(sol.pi(0.25) == Catch::Approx(0.5).margin(1e-12));
    CHECK(sol.phi(0.0) == 0.0);
    CHECK(sol.phi(1.0) == 1.0);
    CHECK(sol.phi(7.3) == 1.0);
}

TEST_CASE("boundary values hold in every regime", "[solve]") {
    for (const auto& p : {kZero, kLow, kHigh}) {
        const auto sol = Solution::solve(p);
        CHECK(sol.phi(0.0) == 0.0);
        CHECK(sol.phi(sol.w_safe()) == 1.0);
        // tolerate a rounding hair above the safe level
        CHECK(sol.phi(sol.w_safe() * (1.0 + 1e-13)) == 1.0);
        CHECK(sol.pi(sol.w_safe() * (1.0 + 1e-13)) ==
              Catch::Approx(sol.pi(sol.w_safe())).margin(1e-12));
    }
}

TEST_CASE("dual variable endpoints and monotonicity", "[solve]") {
    for (const auto& p : {kLow, kHigh}) {
        const auto sol = Solution::solve(p);
        const auto& fb = *sol.boundaries();
        CHECK(sol.dual_variable(0.0) == fb.z_0);
        CHECK(sol.dual_variable(p.b) == fb.z_b);
        double prev = sol.dual_variable(0.0);
        for (int i = 1; i <= 64; ++i) {
            const double z = sol.dual_variable(p.b * i / 64.0);
            REQUIRE(z < prev);
            prev = z;
        }
        CHECK_THROWS_AS(sol.dual_variable(p.b * 1.01), bequest::DomainError);
        CHECK_THROWS_AS(sol.dual_variable(-0.01), bequest::DomainError);
    }
    CHECK_THROWS_AS(Solution::solve(kZero).dual_variable(0.5), bequest::RegimeError);
}

TEST_CASE("dual inversion at w = c/r resolved by brute force", "[solve]") {
    // The marginal-value equation at w = c/r = 0.5 reduces (exponents 2, -1)
    // to (4/3) y - (1/3) y^-2 = 0 in y = z/z_0. Locate the root by scanning a
    // fine grid rather than trusting any algebra, then compare the solver.
    const auto sol = Solution::solve(kLow);
    const auto& fb = *sol.boundaries();
    const auto& k = sol.constants();
    const double cr = kLow.c / kLow.r;
    const double w = cr;
    auto marginal_gap = [&](double y) {
        const double a1 = k.alpha1, a2 = k.alpha2;
        return cr * (a1 * (1.0 - a2) / (a1 - a2) * std::pow(y, a1 - 1.0) +
                     a2 * (a1 - 1.0) / (a1 - a2) * std::pow(y, a2 - 1.0)) -
               (cr - w);
    };
    const double y_oracle = oracles::tabulate_root(marginal_gap, fb.z_b0, 1.0);
    REQUIRE(std::isfinite(y_oracle));
    // the root is 4^(-1/3), strictly inside (z_b0, 1); in particular not 1
    CHECK(y_oracle == Catch::Approx(std::pow(4.0, -1.0 / 3.0)).margin(1e-10));
    CHECK(y_oracle < 1.0 - 0.3);

    const double z = sol.dual_variable(w);
    CHECK(z == Catch::Approx(y_oracle * fb.z_0).margin(1e-10));
    CHECK(z == Catch::Approx(0.95044144833734496487).margin(1e-12));

    // frozen values of phi and pi at that wealth, from 50-digit arithmetic
    CHECK(sol.phi(cr) == Catch::Approx(0.59874059372639576040).margin(1e-12));
    CHECK(sol.pi(cr) == Catch::Approx(1.25992104989487316477).margin(1e-12));
}

TEST_CASE("strategy at zero wealth is strictly positive for c > 0", "[solve]") {
    for (const auto& p : {kLow, kHigh}) {
        const auto sol = Solution::solve(p);
        const auto& k = sol.constants();
        const double expected = p.risk_ratio() * (p.c / p.r) * (k.alpha1 - 1.0) *
                                (1.0 - k.alpha2);
        CHECK(sol.pi(0.0) == Catch::Approx(expected).margin(1e-12));
        CHECK(sol.pi(0.0) > 0.0);
    }
    // frozen: kappa = 1, c/r = 1/2, (alpha1-1)(1-alpha2) = 2
    CHECK(Solution::solve(kLow).pi(0.0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("high-consumption branch values and the kink", "[solve]") {
    const auto sol = Solution::solve(kHigh);
    CHECK(sol.phi(1.5) == 1.0);
    CHECK(sol.pi(1.5) == Catch::Approx(0.0).margin(1e-15));
    CHECK(sol.phi(1.25) == Catch::Approx(0.95616527530830030189).margin(1e-12));

    // value continuity across the goal
    const double phi_b = sol.phi(kHigh.b);
    CHECK(sol.phi(kHigh.b * (1.0 - 1e-11)) == Catch::Approx(phi_b).margin(1e-10));
    CHECK(sol.phi(kHigh.b * (1.0 + 1e-11)) == Catch::Approx(phi_b).margin(1e-10));
    CHECK(phi_b == Catch::Approx(0.82466110123320120755).margin(1e-12));

    // the control jumps down as wealth crosses the goal
    const auto [left, right] = sol.pi_at_goal();
    CHECK(left == Catch::Approx(3.35162051043220789537).margin(1e-11));
    CHECK(right == Catch::Approx(0.5).margin(1e-13));
    CHECK(left > right);
    CHECK(sol.pi(kHigh.b) == left);  // scalar accessor takes the left value

    CHECK_THROWS_AS(sol.pi(-0.01), bequest::DomainError);
    CHECK_THROWS_AS(sol.pi(1.6), bequest::DomainError);
    CHECK_THROWS_AS(sol.phi(-1e-12), bequest::DomainError);
}

TEST_CASE("phi is nondecreasing and concave on its domain", "[solve]") {
    for (const auto& p : {kZero, kLow, kHigh}) {
        const auto sol = Solution::solve(p);
        const double ws = sol.w_safe();
        const int n = 800;
        std::vector<double> v(n + 1);
        for (int i = 0; i <= n; ++i) v[i] = sol.phi(ws * i / static_cast<double>(n));
        for (int i = 0; i < n; ++i) REQUIRE(v[i + 1] - v[i] >= -1e-12);
        for (int i = 1; i < n; ++i) REQUIRE(v[i + 1] - 2.0 * v[i] + v[i - 1] <= 1e-10);
        REQUIRE(v.front() == 0.0);
        REQUIRE(v.back() == 1.0);
    }
}

TEST_CASE("dynamic-programming residual is tiny", "[solve]") {
    const auto solz = Solution::solve(kZero);
    CHECK(bequest::hjb_residual(solz, bequest::interior_grid(solz, 1000)) < 1e-10);
    const auto soll = Solution::solve(kLow);
    CHECK(bequest::hjb_residual(soll, bequest::interior_grid(soll, 1000)) < 1e-6);
    const auto solh = Solution::solve(kHigh);
    CHECK(bequest::hjb_residual(solh, bequest::interior_grid(solh, 1000)) < 1e-6);
}

TEST_CASE("Legendre transform round trip", "[solve]") {
    for (const auto& p : {kLow, kHigh}) {
        const auto sol = Solution::solve(p);
        for (int i = 0; i <= 40; ++i) {
            const double w = p.b * i / 40.0;
            REQUIRE(sol.phi(w) == Catch::Approx(legendre_min(*sol.dual(), w)).margin(1e-8));
        }
    }
}

TEST_CASE("the two positive-consumption formulations agree at c = r b", "[solve]") {
    const ModelParams p(0.08, 0.04, 0.2, 0.04, 0.04, 1.0);  // c == r*b exactly
    const auto low = Solution::solve_as(p, Regime::LowConsumption);
    const auto high = Solution::solve_as(p, Regime::HighConsumption);
    for (int i = 0; i <= 500; ++i) {
        const double w = p.b * i / 500.0;
        REQUIRE(low.phi(w) == Catch::Approx(high.phi(w)).margin(1e-9));
        REQUIRE(low.pi(w) == Catch::Approx(high.pi(w)).margin(1e-9));
    }
}

TEST_CASE("vanishing consumption recovers the closed form", "[solve]") {
    const ModelParams p(0.08, 0.04, 0.2, 0.04, 1e-6, 1.0);
    const auto sol = Solution::solve(p);
    const auto closed = Solution::solve(kZero);
    REQUIRE(sol.boundaries());  // still solved through the dual at c = 1e-6
    double worst_phi = 0.0, worst_pi = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double w = p.b * i / 200.0;
        worst_phi = std::max(worst_phi, std::abs(sol.phi(w) - closed.phi(w)));
        worst_pi = std::max(worst_pi, std::abs(sol.pi(w) - closed.pi(w)));
    }
    CHECK(worst_phi < 1e-3);
    CHECK(worst_pi < 1e-3);
}

TEST_CASE("vanishing goal recovers the pure ruin-avoidance solution", "[solve]") {
    const ModelParams p(0.08, 0.04, 0.2, 0.04, 0.06, 1e-6);
    const auto sol = Solution::solve(p);
    const auto& k = sol.constants();
    const double cr = p.c / p.r;
    double worst_phi = 0.0, worst_pi = 0.0;
    for (int i = 1; i < 200; ++i) {
        const double w = cr * i / 200.0;
        const double phi_limit = 1.0 - std::pow(1.0 - p.r * w / p.c, k.p);
        const double pi_limit = p.risk_ratio() * (cr - w) * (k.alpha1 - 1.0);
        worst_phi = std::max(worst_phi, std::abs(sol.phi(w) - phi_limit));
        if (std::abs(w - p.b) > 1e-3)  // skip the vanishing kink neighborhood
            worst_pi = std::max(worst_pi, std::abs(sol.pi(w) - pi_limit));
    }
    CHECK(worst_phi < 1e-3);
    CHECK(worst_pi < 1e-3);
}

TEST_CASE("degenerate consumption dispatches to the closed form", "[solve]") {
    const ModelParams p(0.08, 0.04, 0.2, 0.04, 1e-15, 1.0);
    const auto sol = Solution::solve(p);
    CHECK(!sol.boundaries());
    CHECK(sol.phi(0.25) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("strategy points carry the dual variable once", "[solve]") {
    const auto sol = Solution::solve(kLow);
    const auto pt = sol.at(0.5);
    REQUIRE(pt.z.has_value());
    CHECK(*pt.z == Catch::Approx(sol.dual_variable(0.5)).margin(1e-15));
    CHECK(pt.phi == Catch::Approx(sol.phi(0.5)).margin(1e-14));
    CHECK(pt.pi_star == Catch::Approx(sol.pi(0.5)).margin(1e-14));

    const auto solz = Solution::solve(kZero);
    CHECK(!solz.at(0.5).z.has_value());

    const auto solh = Solution::solve(kHigh);
    CHECK(!solh.at(1.25).z.has_value());
    CHECK(solh.at(1.25).phi == Catch::Approx(solh.phi(1.25)).margin(1e-14));
}
