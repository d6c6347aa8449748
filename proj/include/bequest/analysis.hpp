#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bequest/model.hpp"
#include "bequest/rootfind.hpp"
#include "bequest/solve.hpp"

namespace bequest {

// ---------------------------------------------------------------------------
// Monotonicity of pi* in wealth (positive consumption, c <= r*b)
// ---------------------------------------------------------------------------

enum class PiMonotonicity {
    IncreasingEverywhere,
    DecreasingThenIncreasing,
    DecreasingEverywhere,
};

inline const char* to_string(PiMonotonicity m) {
    switch (m) {
        case PiMonotonicity::IncreasingEverywhere: return "IncreasingEverywhere";
        case PiMonotonicity::DecreasingThenIncreasing: return "DecreasingThenIncreasing";
        case PiMonotonicity::DecreasingEverywhere: return "DecreasingEverywhere";
    }
    return "?";
}

struct MonotonicityReport {
    PiMonotonicity pattern;
    std::optional<double> w_star;  ///< turning wealth in (0, b), when the pattern has one
    std::optional<double> c_star;  ///< threshold consumption in (0, r*b), when r >= lambda + m
    double f_at_z0;                ///< sign function at the wealth-0 end
    double f_at_zb;                ///< sign function at the goal end
};

namespace detail {

// Sign function of d(pi*)/dw in the dual ratio y = z/z_0; strictly decreasing
// in y. Positive f means pi* is locally increasing in wealth.
inline double pi_slope_sign(const DualTerms& t, double y) {
    return -(t.a1 * (t.a1 - 1.0) * std::pow(y, t.a1 - 1.0) +
             t.a2 * (1.0 - t.a2) * std::pow(y, t.a2 - 1.0));
}

// Wealth corresponding to a dual ratio y, from the marginal-value equation.
inline double wealth_of_ratio(const ModelParams& p, const DualTerms& t, double y) {
    const double cr = p.c / p.r;
    return cr - cr * (t.s1 * std::pow(y, t.a1 - 1.0) + t.s2 * std::pow(y, t.a2 - 1.0));
}

}  // namespace detail

/// Threshold consumption below which pi* still turns from decreasing to
/// increasing when r >= lambda + m. Solves the closed-form threshold equation,
/// which is free of the boundary ratio. Returns nullopt when r < lambda + m
/// (no threshold exists; the turn always happens) or at the degenerate edge
/// alpha1 + alpha2 == 2.
inline std::optional<double> consumption_turn_threshold(const ModelParams& p,
                                                        const DerivedConstants& k) {
    const double a1 = k.alpha1, a2 = k.alpha2;
    const double denom = a1 + a2 - 2.0;  // (r - lambda - m)/m
    if (!(denom > 0.0)) return std::nullopt;
    const double rhs =
        -(a2 / (a1 - 1.0)) * std::pow((1.0 - a2) / a1, -(1.0 - a2) / (a1 - 1.0));
    const double expo = (a1 - a2) / (a1 - 1.0);
    auto lhs = [&](double c) {
        return std::pow((p.r * p.b / c - 1.0) / denom, expo);
    };
    // lhs falls from +inf at c -> 0 to 0 at c = r*b, rhs is a positive constant.
    const double hi = p.r * p.b;
    auto g = [&](double c) { return rhs - lhs(c); };  // increasing in c
    return solve_increasing(g, hi * 1e-12, hi * (1.0 - 1e-14), "consumption_turn_threshold");
}

/// Classifies how pi* moves with wealth on [0, b], from the signs of the
/// slope-sign function at the two ends of the dual interval. When the sign
/// flips inside, the turning wealth w_star is located by root-finding and
/// mapped back to wealth units.
inline MonotonicityReport classify_monotonicity(const Solution& sol) {
    if (sol.regime() != Regime::LowConsumption || !sol.boundaries())
        throw RegimeError("classify_monotonicity: applies to 0 < c <= r*b only");
    const auto& fb = *sol.boundaries();
    const detail::DualTerms t(sol.constants());
    MonotonicityReport rep{};
    rep.f_at_z0 = detail::pi_slope_sign(t, 1.0);
    rep.f_at_zb = detail::pi_slope_sign(t, fb.z_b0);
    if (rep.f_at_z0 >= 0.0) {
        rep.pattern = PiMonotonicity::IncreasingEverywhere;
    } else if (rep.f_at_zb > 0.0) {
        rep.pattern = PiMonotonicity::DecreasingThenIncreasing;
        // f decreases in y, so -f increases; bracket is (z_b0, 1).
        const double y_star = solve_increasing(
            [&](double y) { return -detail::pi_slope_sign(t, y); }, fb.z_b0, 1.0, "w_star");
        rep.w_star = detail::wealth_of_ratio(sol.params(), t, y_star);
    } else {
        rep.pattern = PiMonotonicity::DecreasingEverywhere;
    }
    rep.c_star = consumption_turn_threshold(sol.params(), sol.constants());
    return rep;
}

// ---------------------------------------------------------------------------
// Independence of pi* from the bequest goal below the goal
// ---------------------------------------------------------------------------

struct BIndependenceReport {
    double max_deviation;
    std::size_t n_points;
    bool pass;  ///< max deviation below 1e-9
};

/// Compares pi* under two bequest goals b1 < b2 on a wealth grid inside
/// [0, b1). The two strategies are expected to coincide there for every
/// consumption regime.
inline BIndependenceReport check_b_independence(const ModelParams& base, double b1, double b2,
                                                std::span<const double> w_grid) {
    if (!(0.0 < b1 && b1 < b2))
        throw std::invalid_argument("check_b_independence: need 0 < b1 < b2");
    const ModelParams p1(base.mu, base.r, base.sigma, base.lambda, base.c, b1);
    const ModelParams p2(base.mu, base.r, base.sigma, base.lambda, base.c, b2);
    const Solution s1 = Solution::solve(p1);
    const Solution s2 = Solution::solve(p2);
    BIndependenceReport rep{0.0, 0, true};
    for (double w : w_grid) {
        if (!(w >= 0.0) || !(w < b1)) continue;
        rep.max_deviation = std::max(rep.max_deviation, std::abs(s1.pi(w) - s2.pi(w)));
        ++rep.n_points;
    }
    rep.pass = rep.max_deviation < 1e-9;
    return rep;
}

/// Uniform grid of n points on [0, b1), used as the default for the check.
inline std::vector<double> b_independence_grid(double b1, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = b1 * static_cast<double>(i) / static_cast<double>(n);
    return g;
}

// ---------------------------------------------------------------------------
// Leveraging (zero consumption)
// ---------------------------------------------------------------------------

enum class Leveraging { AlwaysLeveraged, NotAlwaysLeveraged };

struct LeveragingReport {
    Leveraging status;
    double lhs;                     ///< ((mu-r)/sigma^2)/(1-q); leveraged iff > 1
    std::optional<double> sigma_l;  ///< volatility threshold, when one exists
};

/// With c == 0 the optimal strategy is a fixed multiple of wealth; leveraging
/// at every wealth means that multiple exceeds 1. The multiple decreases in
/// sigma; when lambda < (mu+r)/2 it eventually drops below 1, and the
/// crossing volatility sigma_l is located by bisection.
inline LeveragingReport check_leveraging(const ModelParams& p) {
    if (p.c != 0.0) throw RegimeError("check_leveraging: applies to c == 0 only");
    auto multiple = [&](double sigma) {
        const ModelParams q(p.mu, p.r, sigma, p.lambda, 0.0, p.b);
        const DerivedConstants k = derive_constants(q);
        return q.risk_ratio() / (1.0 - k.q);
    };
    LeveragingReport rep{};
    rep.lhs = multiple(p.sigma);
    rep.status = rep.lhs > 1.0 ? Leveraging::AlwaysLeveraged : Leveraging::NotAlwaysLeveraged;
    if (p.lambda < 0.5 * (p.mu + p.r)) {
        double lo = 1e-8, hi = std::max(1.0, 2.0 * p.sigma);
        while (multiple(hi) > 1.0 && hi < 1e8) hi *= 2.0;
        rep.sigma_l =
            solve_increasing([&](double s) { return 1.0 - multiple(s); }, lo, hi, "sigma_l");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Comparisons against benchmark strategies
// ---------------------------------------------------------------------------

struct InequalitySlack {
    std::string name;
    double min_slack;
    std::size_t n_points;
};

struct ComparisonReport {
    std::vector<InequalitySlack> entries;
    /// Whether pi* crosses below the zero-consumption strategy near the goal
    /// (happens when the goal is large enough); the crossing wealth if so.
    bool crosses_zero_consumption = false;
    std::optional<double> crossover_w;
    /// One-sided amounts at the goal (HighConsumption only).
    std::optional<std::pair<double, double>> goal_jump;
};

/// Pointwise strict inequalities of pi* against the benchmark feedback rules:
///   - the ruin-minimizing amount ((mu-r)/sigma^2)*(c/r - w)*(alpha1-1),
///     beaten for wealth below c/r;
///   - the floor-restricted goal-seeking amount ((mu-r)/sigma^2)*(w - c/r)/(1-q),
///     beaten for wealth between c/r and b (LowConsumption);
///   - the zero-consumption amount ((mu-r)/sigma^2)*w/(1-q), beaten everywhere
///     or only below a crossover wealth, depending on the boundary ratio;
///   - the downward jump of pi* at the goal (HighConsumption).
/// Reports the minimum slack of each applicable inequality over the grid.
inline ComparisonReport compare_strategies(const Solution& sol, std::span<const double> w_grid) {
    if (sol.regime() == Regime::ZeroConsumption || !sol.boundaries())
        throw RegimeError("compare_strategies: applies to c > 0 only");
    const ModelParams& p = sol.params();
    const DerivedConstants& k = sol.constants();
    const double kap = p.risk_ratio();
    const double cr = p.c / p.r;
    const double one_m_q = 1.0 - k.q;

    ComparisonReport rep;
    InequalitySlack ruin{"above_ruin_minimizing", std::numeric_limits<double>::infinity(), 0};
    InequalitySlack floor{"above_floor_restricted", std::numeric_limits<double>::infinity(), 0};
    InequalitySlack zc_below{"above_zero_consumption", std::numeric_limits<double>::infinity(), 0};
    InequalitySlack zc_above{"below_zero_consumption_past_crossover",
                             std::numeric_limits<double>::infinity(), 0};

    const auto& fb = *sol.boundaries();
    rep.crosses_zero_consumption = k.alpha1 * std::pow(fb.z_b0, k.alpha1 - 1.0) < 1.0;
    if (rep.crosses_zero_consumption) {
        // pi* ties the zero-consumption rule where alpha1 * y^(alpha1-1) = 1.
        const detail::DualTerms t(k);
        const double y_star = std::pow(1.0 / k.alpha1, 1.0 / (k.alpha1 - 1.0));
        rep.crossover_w = detail::wealth_of_ratio(p, t, y_star);
    }

    const double upper = sol.regime() == Regime::HighConsumption ? p.b : sol.w_safe();
    for (double w : w_grid) {
        if (!(w > 0.0) || !(w < upper)) continue;
        const double pi = sol.pi(w);
        if (w < cr) {
            ruin.min_slack = std::min(ruin.min_slack, pi - kap * (cr - w) * (k.alpha1 - 1.0));
            ++ruin.n_points;
        }
        if (sol.regime() == Regime::LowConsumption && w > cr) {
            floor.min_slack = std::min(floor.min_slack, pi - kap * (w - cr) / one_m_q);
            ++floor.n_points;
        }
        const double zc = kap * w / one_m_q;
        if (!rep.crossover_w || w < *rep.crossover_w) {
            zc_below.min_slack = std::min(zc_below.min_slack, pi - zc);
            ++zc_below.n_points;
        } else if (w > *rep.crossover_w) {
            zc_above.min_slack = std::min(zc_above.min_slack, zc - pi);
            ++zc_above.n_points;
        }
    }
    rep.entries.push_back(ruin);
    if (floor.n_points > 0) rep.entries.push_back(floor);
    rep.entries.push_back(zc_below);
    if (zc_above.n_points > 0) rep.entries.push_back(zc_above);

    if (sol.regime() == Regime::HighConsumption) {
        rep.goal_jump = sol.pi_at_goal();
        rep.entries.push_back(
            {"goal_jump_downward", rep.goal_jump->first - rep.goal_jump->second, 1});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Sensitivities through the full solve pipeline
// ---------------------------------------------------------------------------

struct SensitivityEstimate {
    double derivative;
    double step;
};

/// Central finite difference of pi*(w_small) in the consumption rate. Positive
/// near w = 0: a heavier consumption drain pushes the investor to take more
/// risk to stay clear of ruin. Pass w_small <= 0 to use the default b/100.
inline SensitivityEstimate check_c_sensitivity(const ModelParams& p, double w_small = -1.0) {
    if (!(p.c > 0.0) || !(p.c <= p.r * p.b))
        throw RegimeError("check_c_sensitivity: applies to 0 < c <= r*b");
    if (w_small < 0.0) w_small = p.b / 100.0;
    double h = 1e-5 * p.r * p.b;
    if (h >= p.c) h = 0.5 * p.c;
    const ModelParams lo(p.mu, p.r, p.sigma, p.lambda, p.c - h, p.b);
    const ModelParams hi(p.mu, p.r, p.sigma, p.lambda, p.c + h, p.b);
    const double d =
        (Solution::solve(hi).pi(w_small) - Solution::solve(lo).pi(w_small)) / (2.0 * h);
    return {d, h};
}

struct ZeroCSensitivity {
    double dpi_dlambda;  ///< expected positive
    double dpi_dsigma;   ///< expected negative
};

/// Companion check for c == 0: pi* grows with the hazard rate and shrinks
/// with volatility. Central differences through the full pipeline.
inline ZeroCSensitivity check_zero_c_sensitivity(const ModelParams& p, double w) {
    if (p.c != 0.0) throw RegimeError("check_zero_c_sensitivity: applies to c == 0 only");
    const double hl = 1e-5 * p.lambda;
    const ModelParams lam_lo(p.mu, p.r, p.sigma, p.lambda - hl, 0.0, p.b);
    const ModelParams lam_hi(p.mu, p.r, p.sigma, p.lambda + hl, 0.0, p.b);
    const double hs = 1e-5 * p.sigma;
    const ModelParams sig_lo(p.mu, p.r, p.sigma - hs, p.lambda, 0.0, p.b);
    const ModelParams sig_hi(p.mu, p.r, p.sigma + hs, p.lambda, 0.0, p.b);
    ZeroCSensitivity out{};
    out.dpi_dlambda =
        (Solution::solve(lam_hi).pi(w) - Solution::solve(lam_lo).pi(w)) / (2.0 * hl);
    out.dpi_dsigma =
        (Solution::solve(sig_hi).pi(w) - Solution::solve(sig_lo).pi(w)) / (2.0 * hs);
    return out;
}

}  // namespace bequest
