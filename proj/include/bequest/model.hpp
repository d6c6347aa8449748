#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bequest/errors.hpp"

namespace bequest {

/// Which of the three consumption cases the model falls into. The split is
/// driven by how the consumption rate c compares with the interest earned on
/// the bequest goal, r*b; the tie c == r*b is classified LowConsumption (the
/// two positive-consumption solutions coincide there).
enum class Regime {
    ZeroConsumption,   ///< c == 0
    LowConsumption,    ///< 0 < c <= r*b
    HighConsumption,   ///< c > r*b
};

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::ZeroConsumption: return "ZeroConsumption";
        case Regime::LowConsumption: return "LowConsumption";
        case Regime::HighConsumption: return "HighConsumption";
    }
    return "?";
}

/// Market and investor inputs. Construction validates; invalid parameters are
/// rejected rather than clamped, since every downstream formula assumes the
/// constraints hold.
struct ModelParams {
    double mu;      ///< drift of the risky asset (per year), mu > r
    double r;       ///< riskless rate (per year), r > 0
    double sigma;   ///< volatility (per sqrt-year), sigma > 0
    double lambda;  ///< mortality hazard rate (per year), lambda > 0
    double c;       ///< consumption rate (currency per year), c >= 0
    double b;       ///< bequest goal (currency), b > 0

    ModelParams(double mu_, double r_, double sigma_, double lambda_, double c_, double b_)
        : mu(mu_), r(r_), sigma(sigma_), lambda(lambda_), c(c_), b(b_) {
        auto fail = [](const std::string& msg) { throw std::invalid_argument("ModelParams: " + msg); };
        if (!(std::isfinite(mu) && std::isfinite(r) && std::isfinite(sigma) &&
              std::isfinite(lambda) && std::isfinite(c) && std::isfinite(b)))
            fail("all parameters must be finite");
        if (!(sigma > 0.0)) fail("sigma must be positive");
        if (!(r > 0.0)) fail("r must be positive");
        if (!(mu > r)) fail("mu must exceed r");
        if (!(lambda > 0.0)) fail("lambda must be positive");
        if (!(c >= 0.0)) fail("c must be nonnegative");
        if (!(b > 0.0)) fail("b must be positive");
    }

    /// Dollar exposure per unit of marginal-value ratio, (mu - r) / sigma^2.
    double risk_ratio() const { return (mu - r) / (sigma * sigma); }
};

/// Constants derived in closed form from the model parameters. Every exponent
/// appearing in the solution formulas lives here.
struct DerivedConstants {
    double m;       ///< half squared market price of risk, 0.5*((mu-r)/sigma)^2
    double q;       ///< growth exponent in (0,1); smaller root of r*x^2 - (r+lambda+m)*x + lambda
    double alpha1;  ///< dual exponent > 1; larger root of m*x^2 - (r-lambda+m)*x - lambda
    double alpha2;  ///< dual exponent < 0; smaller root of the same quadratic
    double p;       ///< ruin exponent alpha1/(alpha1-1) > 1
    double w_safe;  ///< safe level max(b, c/r); goal certain at or above it
    Regime regime;
};

inline Regime classify_regime(const ModelParams& p) {
    if (p.c == 0.0) return Regime::ZeroConsumption;
    return p.c <= p.r * p.b ? Regime::LowConsumption : Regime::HighConsumption;
}

/// Computes all derived constants. Roots are taken from the explicit quadratic
/// formulas, rationalized so the small root never suffers cancellation.
inline DerivedConstants derive_constants(const ModelParams& p) {
    DerivedConstants k{};
    const double pr = (p.mu - p.r) / p.sigma;
    k.m = 0.5 * pr * pr;

    // r*q^2 - (r + lambda + m)*q + lambda = 0, smaller root, in (0,1).
    const double sq = p.r + p.lambda + k.m;
    k.q = 2.0 * p.lambda / (sq + std::sqrt(sq * sq - 4.0 * p.r * p.lambda));

    // m*a^2 - (r - lambda + m)*a - lambda = 0; alpha1 > 1 > 0 > alpha2,
    // recovered from each other through the product of roots -lambda/m.
    const double sa = p.r - p.lambda + k.m;
    const double da = std::sqrt(sa * sa + 4.0 * k.m * p.lambda);
    if (sa >= 0.0) {
        k.alpha1 = (sa + da) / (2.0 * k.m);
        k.alpha2 = -p.lambda / (k.m * k.alpha1);
    } else {
        k.alpha2 = (sa - da) / (2.0 * k.m);
        k.alpha1 = -p.lambda / (k.m * k.alpha2);
    }

    k.p = k.alpha1 / (k.alpha1 - 1.0);
    k.w_safe = std::max(p.b, p.c / p.r);
    k.regime = classify_regime(p);
    return k;
}

}  // namespace bequest
