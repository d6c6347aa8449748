#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "bequest/dual.hpp"
#include "bequest/errors.hpp"
#include "bequest/model.hpp"

namespace bequest {

/// One evaluated point of the solution. The dual variable z is carried along
/// when it was needed (positive consumption, wealth at or below the goal), so
/// callers asking for both phi and pi at the same wealth pay one inversion.
struct StrategyPoint {
    double w;
    double phi;
    double pi_star;
    std::optional<double> z;
};

/// Maximum probability of meeting the bequest goal at death, phi(w), together
/// with the optimal dollar amount in the risky asset, pi*(w), on [0, w_safe].
///
/// ZeroConsumption is fully closed-form. For positive consumption the solution
/// is evaluated through the convex dual: wealth maps to the dual variable via
/// z = phi_w, and both phi and pi* are explicit in z. Immutable after solve();
/// all evaluators are const and reentrant.
class Solution {
public:
    static Solution solve(const ModelParams& p) {
        return Solution(p, derive_constants(p));
    }

    /// Builds the solution through a forced regime branch instead of the
    /// classified one. Only the LowConsumption/HighConsumption pair at
    /// c == r*b is meaningfully interchangeable; this exists so the agreement
    /// of the two formulations at that boundary can be cross-checked.
    static Solution solve_as(const ModelParams& p, Regime forced) {
        DerivedConstants k = derive_constants(p);
        if (forced != Regime::ZeroConsumption && p.c <= 0.0)
            throw RegimeError("solve_as: positive-consumption branch needs c > 0");
        k.regime = forced;
        return Solution(p, k);
    }

    const ModelParams& params() const { return params_; }
    const DerivedConstants& constants() const { return constants_; }
    Regime regime() const { return constants_.regime; }
    double w_safe() const { return constants_.w_safe; }

    /// Present iff the dual machinery was engaged (absent for c == 0 and for
    /// consumption so small that the boundary ratio would underflow, where the
    /// zero-consumption closed form is used instead).
    const std::optional<FreeBoundaries>& boundaries() const { return boundaries_; }
    const DualFunction* dual() const { return dual_ ? &*dual_ : nullptr; }

    /// phi(w). Defined for all w >= 0; returns 1 at and above the safe level
    /// (also absorbing small floating overshoot past w_safe).
    double phi(double w) const {
        if (!(w >= 0.0)) throw DomainError("phi: wealth must be nonnegative");
        if (w >= constants_.w_safe) return 1.0;
        if (!dual_) return std::pow(w / params_.b, constants_.q);
        if (w <= params_.b) {
            const double z = dual_->invert_slope(w);
            return clamp01(phi_from_dual(z));
        }
        return clamp01(phi_above_goal(w));
    }

    /// pi*(w) on [0, w_safe]. At the HighConsumption kink w == b the control
    /// is discontinuous; this returns the left value (see pi_at_goal for the
    /// pair). Simulation uses the same left-value convention.
    double pi(double w) const {
        const double ws = constants_.w_safe;
        if (w > ws && w <= ws * (1.0 + 1e-12)) w = ws;
        if (!(w >= 0.0) || !(w <= ws))
            throw DomainError("pi: wealth must lie in [0, w_safe]");
        if (!dual_) return params_.risk_ratio() * w / (1.0 - constants_.q);
        if (w <= params_.b) {
            const double z = dual_->invert_slope(w);
            return pi_from_dual(z);
        }
        return params_.risk_ratio() * (params_.c / params_.r - w) * (constants_.alpha1 - 1.0);
    }

    /// One-sided optimal amounts at the goal, (pi*(b-), pi*(b+)). They differ
    /// only in the HighConsumption regime, where the investor turns
    /// conservative once wealth exceeds the goal.
    std::pair<double, double> pi_at_goal() const {
        if (!dual_ || constants_.regime != Regime::HighConsumption) {
            const double v = pi(params_.b);
            return {v, v};
        }
        const double left = pi_from_dual(boundaries_->z_b);
        const double right =
            params_.risk_ratio() * (params_.c / params_.r - params_.b) * (constants_.alpha1 - 1.0);
        return {left, right};
    }

    /// Dual variable z in [z_b, z_0] for wealth w in [0, b]; z is phi_w and
    /// is strictly decreasing in w, with z(0) = z_0 and z(b) = z_b.
    double dual_variable(double w) const {
        if (!dual_)
            throw RegimeError("dual_variable: no dual is attached in this regime");
        if (!(w >= 0.0) || !(w <= params_.b))
            throw DomainError("dual_variable: wealth must lie in [0, b]");
        return dual_->invert_slope(w);
    }

    /// Marginal value phi_w(w) on (0, w_safe). Equals the dual variable when
    /// one exists; diverges as w -> 0 in the zero-consumption closed form.
    double marginal_value(double w) const {
        if (!(w >= 0.0) || !(w < constants_.w_safe))
            throw DomainError("marginal_value: wealth must lie in [0, w_safe)");
        if (!dual_) {
            if (w == 0.0)
                throw DomainError("marginal_value: diverges at w = 0 in the closed form");
            return constants_.q * std::pow(w / params_.b, constants_.q) / w;
        }
        if (w <= params_.b) return dual_->invert_slope(w);
        return z_above_goal(w);
    }

    /// The optimized second-order term -phi_w^2 / phi_ww >= 0. Through the
    /// dual this is z^2 * v''(z). At the HighConsumption kink it returns the
    /// w < b side.
    double risk_term(double w) const {
        if (!(w > 0.0) || !(w < constants_.w_safe))
            throw DomainError("risk_term: wealth must lie in (0, w_safe)");
        if (!dual_)
            return constants_.q / (1.0 - constants_.q) * std::pow(w / params_.b, constants_.q);
        if (w <= params_.b) return dual_->scaled_curvature(dual_->invert_slope(w));
        const double cr = params_.c / params_.r;
        const double u = (cr - w) / (cr - params_.b);
        return (cr - params_.b) * (constants_.alpha1 - 1.0) * boundaries_->z_b *
               std::pow(u, constants_.p);
    }

    /// phi, pi* and (when applicable) z at one wealth, with a single dual
    /// inversion shared between the three.
    StrategyPoint at(double w) const {
        if (!(w >= 0.0)) throw DomainError("at: wealth must be nonnegative");
        const double ws = constants_.w_safe;
        StrategyPoint s{w, 1.0, 0.0, std::nullopt};
        if (w > ws && w <= ws * (1.0 + 1e-12)) w = s.w = ws;
        if (w > ws) {
            s.phi = 1.0;  // beyond the safe level the goal is certain
            s.pi_star = 0.0;
            return s;
        }
        if (!dual_) {
            s.phi = w >= ws ? 1.0 : std::pow(w / params_.b, constants_.q);
            s.pi_star = params_.risk_ratio() * w / (1.0 - constants_.q);
            return s;
        }
        if (w <= params_.b) {
            const double z = dual_->invert_slope(w);
            s.z = z;
            s.phi = w >= ws ? 1.0 : clamp01(phi_from_dual(z));
            s.pi_star = pi_from_dual(z);
            return s;
        }
        s.phi = w >= ws ? 1.0 : clamp01(phi_above_goal(w));
        s.pi_star = params_.risk_ratio() * (params_.c / params_.r - w) * (constants_.alpha1 - 1.0);
        return s;
    }

private:
    Solution(const ModelParams& p, const DerivedConstants& k)
        : params_(p), constants_(k) {
        // Consumption this small would underflow the boundary ratio; the
        // solution is within O(c) of the zero-consumption closed form.
        const bool degenerate = p.c < 1e-10 * p.r * p.b;
        if (k.regime != Regime::ZeroConsumption && !degenerate) {
            boundaries_ = solve_boundaries(p, k);
            dual_.emplace(p, k, *boundaries_);
        }
    }

    static double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

    double phi_from_dual(double z) const {
        const detail::DualTerms t(constants_);
        const double cr = params_.c / params_.r;
        const double y = z / boundaries_->z_0;
        return cr * t.cfac * (std::pow(y, t.a2 - 1.0) - std::pow(y, t.a1 - 1.0)) * z;
    }

    double pi_from_dual(double z) const {
        const detail::DualTerms t(constants_);
        const double cr = params_.c / params_.r;
        const double y = z / boundaries_->z_0;
        return params_.risk_ratio() * cr * t.cfac *
               (t.a1 * std::pow(y, t.a1 - 1.0) - t.a2 * std::pow(y, t.a2 - 1.0));
    }

    // HighConsumption, goal < w <= c/r: the dual's polynomial branch inverts
    // in closed form, z = z_b * u^{1/(alpha1-1)} with u = (c/r-w)/(c/r-b).
    double z_above_goal(double w) const {
        const double cr = params_.c / params_.r;
        const double u = (cr - w) / (cr - params_.b);
        return boundaries_->z_b * std::pow(u, 1.0 / (constants_.alpha1 - 1.0));
    }

    double phi_above_goal(double w) const {
        const double cr = params_.c / params_.r;
        const double u = (cr - w) / (cr - params_.b);
        return 1.0 - (cr - params_.b) * (boundaries_->z_b / constants_.p) *
                         std::pow(u, constants_.p);
    }

    ModelParams params_;
    DerivedConstants constants_;
    std::optional<FreeBoundaries> boundaries_;
    std::optional<DualFunction> dual_;
};

}  // namespace bequest
