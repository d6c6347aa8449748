#pragma once

#include <cmath>
#include <limits>

#include "bequest/errors.hpp"
#include "bequest/model.hpp"
#include "bequest/rootfind.hpp"

namespace bequest {

/// Endpoints of the continuation region of the dual free-boundary problem,
/// expressed per unit of currency. The ratio z_b0 = z_b/z_0 is what the
/// boundary equation actually pins down; the boundaries follow in closed form.
struct FreeBoundaries {
    double z_b0;  ///< z_b / z_0, in (0, 1)
    double z_b;   ///< lower boundary; maps to wealth b under w -> marginal value
    double z_0;   ///< upper boundary; maps to wealth 0
    Regime regime;
};

namespace detail {

/// Weights of the two power solutions z^alpha1 and z^alpha2 that make up the
/// dual on the continuation region, precomputed once per model.
struct DualTerms {
    double a1, a2;  // exponents
    double w1, w2;  // value weights: w1*(z/z0)^a1 + w2*(z/z0)^a2 - z/z0
    double s1, s2;  // slope weights a1*w1 and a2*w2
    double cfac;    // (a1-1)(1-a2)/(a1-a2), common curvature factor

    explicit DualTerms(const DerivedConstants& k)
        : a1(k.alpha1),
          a2(k.alpha2),
          w1((1.0 - k.alpha2) / (k.alpha1 - k.alpha2)),
          w2((k.alpha1 - 1.0) / (k.alpha1 - k.alpha2)),
          s1(k.alpha1 * w1),
          s2(k.alpha2 * w2),
          cfac((k.alpha1 - 1.0) * (1.0 - k.alpha2) / (k.alpha1 - k.alpha2)) {}
};

}  // namespace detail

/// Solves for the boundary ratio z_b0 in (0, 1). The defining equation has a
/// strictly increasing left side that runs from -infinity up to c/r, while the
/// right side is c/r - b, so a single bracketed root always exists for c > 0.
inline double solve_zb0(const ModelParams& p, const DerivedConstants& k) {
    if (!(p.c > 0.0))
        throw RegimeError("solve_zb0: boundary ratio exists only for positive consumption");
    const detail::DualTerms t(k);
    const double cr = p.c / p.r;
    const double target = cr - p.b;
    auto f = [&](double z) {
        return cr * (t.s1 * std::pow(z, t.a1 - 1.0) + t.s2 * std::pow(z, t.a2 - 1.0)) - target;
    };
    auto df = [&](double z) {
        return cr * (t.s1 * (t.a1 - 1.0) * std::pow(z, t.a1 - 2.0) +
                     t.s2 * (t.a2 - 1.0) * std::pow(z, t.a2 - 2.0));
    };
    const double eps = 1e-14;
    return solve_increasing(f, df, eps, 1.0 - eps, "solve_zb0");
}

/// Computes both free boundaries from z_b0.
///
/// LowConsumption anchors the lower boundary: 1/z_b is an explicit combination
/// of powers of z_b0, and z_0 = z_b / z_b0. HighConsumption anchors the upper
/// boundary instead: 1/z_0 = (c/r) * ((alpha1-1)/alpha1) * z_b0^alpha2, and
/// z_b = z_0 * z_b0.
inline FreeBoundaries solve_boundaries(const ModelParams& p, const DerivedConstants& k) {
    const double zb0 = solve_zb0(p, k);
    const detail::DualTerms t(k);
    const double cr = p.c / p.r;

    FreeBoundaries fb{};
    fb.z_b0 = zb0;
    fb.regime = k.regime;
    if (k.regime == Regime::LowConsumption) {
        const double inv_zb =
            cr * t.cfac * (std::pow(zb0, t.a2 - 1.0) - std::pow(zb0, t.a1 - 1.0));
        fb.z_b = 1.0 / inv_zb;
        fb.z_0 = fb.z_b / zb0;
    } else {
        const double inv_z0 = cr * ((t.a1 - 1.0) / t.a1) * std::pow(zb0, t.a2);
        fb.z_0 = 1.0 / inv_z0;
        fb.z_b = fb.z_0 * zb0;
    }
    return fb;
}

/// Value, slope and curvature of the dual at a point. The curvature is carried
/// as a one-sided pair: HighConsumption duals are only C^1 at z_b, so the
/// second derivative genuinely jumps there. Away from that point the two
/// entries coincide.
struct DualEval {
    double value;
    double slope;
    double curvature_left;
    double curvature_right;

    double curvature() const { return curvature_right; }
};

/// The convex dual of the goal-reaching probability.
///
/// On the continuation region it solves
///     lambda*v = (lambda - r)*z*v' + m*z^2*v'' - c*z   (+ lambda for z <= z_b
/// in the HighConsumption case), with value matching and smooth pasting at the
/// boundaries. Outside the region it continues with the stopped payoff:
/// 1 - b*z below z_b (LowConsumption) and 0 above z_0. It is decreasing and
/// convex on its domain, which is [z_b, z_0] for LowConsumption and [0, z_0]
/// for HighConsumption.
class DualFunction {
public:
    DualFunction(const ModelParams& p, const DerivedConstants& k, const FreeBoundaries& fb)
        : p_(p), k_(k), fb_(fb), t_(k) {}

    const FreeBoundaries& boundaries() const { return fb_; }
    const DerivedConstants& constants() const { return k_; }
    const ModelParams& params() const { return p_; }

    /// Lower end of the solved domain: z_b (Low) or 0 (High).
    double domain_lo() const {
        return k_.regime == Regime::HighConsumption ? 0.0 : fb_.z_b;
    }
    double domain_hi() const { return fb_.z_0; }

    DualEval eval(double z) const {
        if (!(z >= 0.0)) throw DomainError("DualFunction: dual variable must be nonnegative");
        if (z > fb_.z_0) return {0.0, 0.0, 0.0, 0.0};
        if (k_.regime == Regime::LowConsumption) {
            if (z < fb_.z_b) return {1.0 - p_.b * z, -p_.b, 0.0, 0.0};
            return eval_continuation(z);
        }
        // HighConsumption: polynomial branch on [0, z_b], power branch above.
        if (z < fb_.z_b) return eval_stefan_lower(z);
        if (z > fb_.z_b) return eval_continuation(z);
        DualEval lo = eval_stefan_lower(z);
        DualEval hi = eval_continuation(z);
        return {hi.value, hi.slope, lo.curvature_right, hi.curvature_right};
    }

    double value(double z) const { return eval(z).value; }
    double slope(double z) const { return eval(z).slope; }

    /// z^2 * v''(z), computed without forming v'' itself so that it stays
    /// finite as z -> 0 in the HighConsumption case (where v'' can blow up
    /// while the product tends to 0). At z_b it returns the right limit.
    double scaled_curvature(double z) const {
        if (!(z >= 0.0)) throw DomainError("DualFunction: dual variable must be nonnegative");
        if (z > fb_.z_0) return 0.0;
        if (k_.regime == Regime::HighConsumption && z < fb_.z_b) {
            const double cr = p_.c / p_.r;
            return (cr - p_.b) * (t_.a1 - 1.0) * fb_.z_b * std::pow(z / fb_.z_b, t_.a1);
        }
        if (k_.regime == Regime::LowConsumption && z < fb_.z_b) return 0.0;
        const double y = z / fb_.z_0;
        const double cr = p_.c / p_.r;
        return cr * fb_.z_0 * t_.cfac *
               (t_.a1 * std::pow(y, t_.a1) - t_.a2 * std::pow(y, t_.a2));
    }

    /// Inverts the slope on [z_b, z_0]: the z at which v'(z) = -w, for
    /// w in [0, b]. v' is strictly increasing there (v is convex), rising
    /// from -b at z_b to 0 at z_0.
    double invert_slope(double w) const {
        if (!(w >= 0.0) || !(w <= p_.b))
            throw DomainError("DualFunction::invert_slope: wealth must lie in [0, b]");
        if (w == 0.0) return fb_.z_0;
        if (w == p_.b) return fb_.z_b;
        auto f = [&](double z) { return eval_continuation(z).slope + w; };
        auto df = [&](double z) { return eval_continuation(z).curvature_right; };
        // the endpoint slopes carry the boundary-solve residual (~1 ulp), so a
        // w within rounding of 0 or b may not straddle; clamp instead of throwing
        if (f(fb_.z_b) >= 0.0) return fb_.z_b;
        if (f(fb_.z_0) <= 0.0) return fb_.z_0;
        return solve_increasing(f, df, fb_.z_b, fb_.z_0, "invert_slope");
    }

private:
    DualEval eval_continuation(double z) const {
        const double cr = p_.c / p_.r;
        const double y = z / fb_.z_0;
        const double y1 = std::pow(y, t_.a1);
        const double y2 = std::pow(y, t_.a2);
        const double value = cr * fb_.z_0 * (t_.w1 * y1 + t_.w2 * y2 - y);
        const double slope = cr * (t_.s1 * y1 / y + t_.s2 * y2 / y - 1.0);
        const double curve =
            cr / fb_.z_0 * t_.cfac * (t_.a1 * y1 - t_.a2 * y2) / (y * y);
        return {value, slope, curve, curve};
    }

    DualEval eval_stefan_lower(double z) const {
        const double cr = p_.c / p_.r;
        const double gap = cr - p_.b;  // positive in this regime
        if (z == 0.0) {
            // pow(0, a1-2) is +inf for a1 < 2; report the limit directly
            double curve = t_.a1 < 2.0 ? std::numeric_limits<double>::infinity()
                                       : (t_.a1 == 2.0 ? gap * (t_.a1 - 1.0) / fb_.z_b : 0.0);
            return {1.0, -cr, curve, curve};
        }
        const double u = z / fb_.z_b;
        const double u1 = std::pow(u, t_.a1);
        const double value = 1.0 + gap * (fb_.z_b / t_.a1) * u1 - cr * z;
        const double slope = gap * u1 / u - cr;
        const double curve = gap * (t_.a1 - 1.0) / fb_.z_b * u1 / (u * u);
        return {value, slope, curve, curve};
    }

    ModelParams p_;
    DerivedConstants k_;
    FreeBoundaries fb_;
    detail::DualTerms t_;
};

}  // namespace bequest
