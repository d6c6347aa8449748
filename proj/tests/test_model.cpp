#include <catch2/catch_amalgamated.hpp>

#include "bequest/model.hpp"
#include "oracles.hpp"

using bequest::DerivedConstants;
using bequest::derive_constants;
using bequest::ModelParams;
using bequest::Regime;

namespace {

double q_quadratic_residual(const ModelParams& p, const DerivedConstants& k) {
    return p.r * k.q * k.q - (p.r + p.lambda + k.m) * k.q + p.lambda;
}

double alpha_quadratic_residual(const ModelParams& p, const DerivedConstants& k, double a) {
    return k.m * a * a - (p.r - p.lambda + k.m) * a - p.lambda;
}

}  // namespace

TEST_CASE("derived constants at the closed-form benchmark point", "[model]") {
    const ModelParams p(0.08, 0.04, 0.2, 0.04, 0.0, 1.0);
    const auto k = derive_constants(p);
    CHECK(k.m == Catch::Approx(0.02).margin(1e-15));
    CHECK(k.q == Catch::Approx(0.5).margin(1e-14));
    CHECK(k.alpha1 == Catch::Approx(2.0).margin(1e-13));
    CHECK(k.alpha2 == Catch::Approx(-1.0).margin(1e-13));
    CHECK(k.p == Catch::Approx(2.0).margin(1e-13));
    CHECK(k.w_safe == 1.0);
    CHECK(k.regime == Regime::ZeroConsumption);

    // the roots must satisfy their quadratics, not just match frozen values
    CHECK(std::abs(q_quadratic_residual(p, k)) < 1e-14);
    CHECK(std::abs(alpha_quadratic_residual(p, k, k.alpha1)) < 1e-14);
    CHECK(std::abs(alpha_quadratic_residual(p, k, k.alpha2)) < 1e-14);
}

TEST_CASE("regime classification and safe level", "[model]") {
    const auto low = derive_constants({0.08, 0.04, 0.2, 0.04, 0.02, 1.0});
    CHECK(low.regime == Regime::LowConsumption);
    CHECK(low.w_safe == 1.0);

    // the tie c == r*b counts as LowConsumption
    const auto tie = derive_constants({0.08, 0.04, 0.2, 0.04, 0.04, 1.0});
    CHECK(tie.regime == Regime::LowConsumption);

    const auto high = derive_constants({0.08, 0.04, 0.2, 0.04, 0.06, 1.0});
    CHECK(high.regime == Regime::HighConsumption);
    CHECK(high.w_safe == Catch::Approx(1.5).margin(1e-15));
}

TEST_CASE("parameter validation rejects instead of clamping", "[model]") {
    CHECK_THROWS_AS(ModelParams(0.08, 0.04, 0.0, 0.04, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ModelParams(0.08, 0.04, -0.2, 0.04, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ModelParams(0.04, 0.04, 0.2, 0.04, 0.0, 1.0), std::invalid_argument);  // mu == r
    CHECK_THROWS_AS(ModelParams(0.03, 0.04, 0.2, 0.04, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ModelParams(0.08, 0.0, 0.2, 0.04, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ModelParams(0.08, 0.04, 0.2, 0.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ModelParams(0.08, 0.04, 0.2, 0.04, -0.01, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ModelParams(0.08, 0.04, 0.2, 0.04, 0.0, 0.0), std::invalid_argument);
    const double nan = std::nan("");
    CHECK_THROWS_AS(ModelParams(nan, 0.04, 0.2, 0.04, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("constants hold their invariants over random parameters", "[model]") {
    oracles::ParamSampler sampler(0xbe9e5701u);
    const Regime regimes[] = {Regime::ZeroConsumption, Regime::LowConsumption,
                              Regime::HighConsumption};
    for (int i = 0; i < 10000; ++i) {
        const auto p = sampler.draw(regimes[i % 3]);
        const auto k = derive_constants(p);
        REQUIRE(k.q > 0.0);
        REQUIRE(k.q < 1.0);
        REQUIRE(k.alpha1 > 1.0);
        REQUIRE(k.alpha2 < 0.0);
        REQUIRE(k.p > 1.0);
        REQUIRE(std::abs(q_quadratic_residual(p, k)) < 1e-12);
        REQUIRE(std::abs(alpha_quadratic_residual(p, k, k.alpha1)) < 1e-12);
        REQUIRE(std::abs(alpha_quadratic_residual(p, k, k.alpha2)) < 1e-12);
        // the two quadratics are tied together through 1 - q = 1/(1 - alpha2)
        REQUIRE(std::abs((1.0 - k.q) - 1.0 / (1.0 - k.alpha2)) < 1e-12);
        REQUIRE(k.w_safe == std::max(p.b, p.c / p.r));
    }
}

TEST_CASE("q rises with the hazard rate and falls with the risk premium term", "[model]") {
    auto q_of = [](double lambda, double m_target) {
        // pick sigma so that m equals m_target with mu - r fixed at 0.04
        const double sigma = 0.04 / std::sqrt(2.0 * m_target);
        return derive_constants({0.08, 0.04, sigma, lambda, 0.0, 1.0}).q;
    };
    for (double lambda : {0.02, 0.04, 0.08}) {
        for (double m : {0.005, 0.02, 0.08}) {
            const double h = 1e-6;
            CHECK(oracles::central_diff([&](double l) { return q_of(l, m); }, lambda, h) > 0.0);
            CHECK(oracles::central_diff([&](double mm) { return q_of(lambda, mm); }, m, h) < 0.0);
        }
    }
}

TEST_CASE("sigma^2 (1 - q) increases with sigma", "[model]") {
    auto value = [](double sigma) {
        const auto k = derive_constants({0.08, 0.04, sigma, 0.04, 0.0, 1.0});
        return sigma * sigma * (1.0 - k.q);
    };
    for (double sigma = 0.1; sigma <= 0.61; sigma += 0.05)
        CHECK(oracles::central_diff(value, sigma, 1e-6) > 0.0);
}
