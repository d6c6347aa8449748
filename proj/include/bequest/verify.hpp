#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bequest/analysis.hpp"
#include "bequest/dual.hpp"
#include "bequest/mc.hpp"
#include "bequest/model.hpp"
#include "bequest/solve.hpp"

namespace bequest {

/// One verification check: `value` is a residual (pass when below tol) or a
/// slack (pass when above tol), as indicated by `kind`.
struct CheckResult {
    std::string name;
    double value;
    double tol;
    enum class Kind { ResidualBelow, SlackAbove } kind;
    bool pass;
};

struct VerifyOptions {
    bool quick = false;          ///< skip the Monte Carlo agreement checks
    double corrupt_zb0 = 1.0;    ///< testing hook: scales the solved boundary ratio
    std::int64_t mc_paths = 20000;
    double mc_dt = 1e-3;
    double mc_w0 = -1.0;         ///< starting wealth for the MC check; < 0 picks w_safe/2
    std::uint64_t seed = 20260809;
    int n_threads = 0;
};

struct VerifyReport {
    std::vector<CheckResult> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    const CheckResult* first_failure() const {
        for (const auto& c : checks)
            if (!c.pass) return &c;
        return nullptr;
    }
};

namespace detail {

inline void push_residual(VerifyReport& rep, std::string name, double value, double tol) {
    rep.checks.push_back({std::move(name), value, tol, CheckResult::Kind::ResidualBelow,
                          std::abs(value) < tol});
}

inline void push_slack(VerifyReport& rep, std::string name, double value, double tol) {
    rep.checks.push_back(
        {std::move(name), value, tol, CheckResult::Kind::SlackAbove, value > tol});
}

// Smallest value of v(z) + w*z over the dual domain, by scanning a fine grid
// and refining the bracketing pair with a parabolic fit. Independent of the
// slope-inversion path it is used to check.
inline double legendre_grid_min(const DualFunction& dual, double w, std::size_t n_grid) {
    const double lo = dual.domain_lo(), hi = dual.domain_hi();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i <= n_grid; ++i) {
        const double z = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_grid);
        const double v = dual.value(z) + w * z;
        if (v < best) {
            best = v;
            best_i = i;
        }
    }
    if (best_i == 0 || best_i == n_grid) return best;
    const double h = (hi - lo) / static_cast<double>(n_grid);
    const double z1 = lo + h * static_cast<double>(best_i);
    const double f0 = dual.value(z1 - h) + w * (z1 - h);
    const double f1 = best;
    const double f2 = dual.value(z1 + h) + w * (z1 + h);
    const double denom = f0 - 2.0 * f1 + f2;
    if (denom <= 0.0) return best;
    const double shift = 0.5 * h * (f0 - f2) / denom;
    const double zs = z1 + shift;
    return std::min(best, dual.value(zs) + w * zs);
}

}  // namespace detail

inline void verify_dual_block(VerifyReport& rep, const ModelParams& p, const DerivedConstants& k,
                              const FreeBoundaries& fb);

/// Runs the whole self-verification battery for one parameter set: derived
/// constant identities, boundary and smooth-pasting residuals, the dual ODE
/// residual, convexity and monotonicity, boundary values and concavity of
/// phi, the dynamic-programming residual, the Legendre round trip, strategy
/// inequalities, and (unless quick) Monte Carlo agreement. Tolerances are
/// fixed here, not configurable.
inline VerifyReport run_verify(const ModelParams& p, const VerifyOptions& opt = {}) {
    VerifyReport rep;
    const DerivedConstants k = derive_constants(p);

    // Derived-constant identities.
    detail::push_residual(rep, "constants.q_quadratic",
                          p.r * k.q * k.q - (p.r + p.lambda + k.m) * k.q + p.lambda, 1e-12);
    const double qa1 = k.m * k.alpha1 * k.alpha1 - (p.r - p.lambda + k.m) * k.alpha1 - p.lambda;
    const double qa2 = k.m * k.alpha2 * k.alpha2 - (p.r - p.lambda + k.m) * k.alpha2 - p.lambda;
    detail::push_residual(rep, "constants.alpha_quadratic",
                          std::max(std::abs(qa1), std::abs(qa2)), 1e-12);
    detail::push_residual(rep, "constants.q_alpha2_identity",
                          (1.0 - k.q) - 1.0 / (1.0 - k.alpha2), 1e-12);

    const Solution sol = Solution::solve(p);

    if (sol.boundaries() && opt.corrupt_zb0 == 1.0) {
        // boundaries as solved
        verify_dual_block(rep, p, k, *sol.boundaries());
    } else if (sol.boundaries()) {
        FreeBoundaries fb = *sol.boundaries();
        fb.z_b0 *= opt.corrupt_zb0;
        if (k.regime == Regime::LowConsumption) {
            const detail::DualTerms t(k);
            const double cr = p.c / p.r;
            fb.z_b = 1.0 / (cr * t.cfac *
                            (std::pow(fb.z_b0, t.a2 - 1.0) - std::pow(fb.z_b0, t.a1 - 1.0)));
            fb.z_0 = fb.z_b / fb.z_b0;
        } else {
            const detail::DualTerms t(k);
            const double cr = p.c / p.r;
            fb.z_0 = 1.0 / (cr * ((t.a1 - 1.0) / t.a1) * std::pow(fb.z_b0, t.a2));
            fb.z_b = fb.z_0 * fb.z_b0;
        }
        verify_dual_block(rep, p, k, fb);
    }

    // Primal boundary values, shape, equation residual, Legendre round trip.
    detail::push_residual(rep, "primal.phi_at_zero", sol.phi(0.0), 1e-14);
    detail::push_residual(rep, "primal.phi_at_safe_level", sol.phi(sol.w_safe()) - 1.0, 1e-14);

    {
        const std::size_t n = 1000;
        const double ws = sol.w_safe();
        std::vector<double> phis(n + 1);
        for (std::size_t i = 0; i <= n; ++i)
            phis[i] = sol.phi(ws * static_cast<double>(i) / static_cast<double>(n));
        double min_step = std::numeric_limits<double>::infinity();
        double max_second = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 <= n; ++i)
            min_step = std::min(min_step, phis[i + 1] - phis[i]);
        for (std::size_t i = 1; i + 1 <= n; ++i)
            max_second = std::max(max_second, phis[i + 1] - 2.0 * phis[i] + phis[i - 1]);
        detail::push_slack(rep, "primal.nondecreasing_min_step", min_step, -1e-12);
        detail::push_residual(rep, "primal.concavity_max_second_diff",
                              std::max(max_second, 0.0), 1e-10);
    }

    {
        const auto grid = interior_grid(sol, 1000);
        const double tol = sol.regime() == Regime::ZeroConsumption ? 1e-10 : 1e-6;
        detail::push_residual(rep, "primal.hjb_residual_max", hjb_residual(sol, grid), tol);
    }

    if (sol.dual()) {
        double worst = 0.0;
        const std::size_t nw = 101;
        for (std::size_t i = 0; i <= nw; ++i) {
            const double w = p.b * static_cast<double>(i) / static_cast<double>(nw);
            const double direct = sol.phi(w);
            const double mini = detail::legendre_grid_min(*sol.dual(), w, 20000);
            worst = std::max(worst, std::abs(direct - mini));
        }
        detail::push_residual(rep, "primal.legendre_roundtrip_max", worst, 1e-8);

        // the dual variable must fall strictly as wealth rises
        double prev = sol.dual_variable(0.0);
        double min_drop = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i <= 100; ++i) {
            const double z = sol.dual_variable(p.b * static_cast<double>(i) / 100.0);
            min_drop = std::min(min_drop, prev - z);
            prev = z;
        }
        detail::push_slack(rep, "primal.dual_variable_decreasing", min_drop, 0.0);
    }

    if (sol.regime() != Regime::ZeroConsumption && sol.boundaries()) {
        std::vector<double> grid;
        for (std::size_t i = 1; i < 400; ++i)
            grid.push_back(sol.w_safe() * static_cast<double>(i) / 400.0);
        const auto cmp = compare_strategies(sol, grid);
        for (const auto& e : cmp.entries)
            if (e.n_points > 0)
                detail::push_slack(rep, "strategy." + e.name, e.min_slack, 0.0);
    }

    if (!opt.quick) {
        SimConfig cfg;
        cfg.n_paths = opt.mc_paths;
        cfg.dt = opt.mc_dt;
        cfg.seed = opt.seed;
        cfg.n_threads = opt.n_threads;
        const double w0 = opt.mc_w0 >= 0.0 ? opt.mc_w0 : 0.5 * sol.w_safe();
        SimResult res;
        if (sol.regime() == Regime::ZeroConsumption) {
            res = simulate(p, cfg, w0, optimal_strategy_zero_c(sol));
            detail::push_residual(rep, "mc.no_ruin_zero_c",
                                  static_cast<double>(res.n_ruined), 0.5);
        } else {
            res = simulate(p, cfg, w0, TabulatedStrategy(sol));
        }
        const double gap = std::abs(res.p_hat - sol.phi(w0));
        detail::push_residual(rep, "mc.phi_agreement_gap_over_se",
                              gap / std::max(res.std_err, 1e-300), 3.0);
    }
    return rep;
}

/// Dual-side checks shared by run_verify: boundary-equation residual, smooth
/// pasting, the interval inequalities that place the boundaries around 1/b,
/// the ODE residual on an interior grid, and shape (decreasing, convex).
inline void verify_dual_block(VerifyReport& rep, const ModelParams& p, const DerivedConstants& k,
                              const FreeBoundaries& fb) {
    const detail::DualTerms t(k);
    const double cr = p.c / p.r;

    const double root_res = cr * (t.s1 * std::pow(fb.z_b0, t.a1 - 1.0) +
                                  t.s2 * std::pow(fb.z_b0, t.a2 - 1.0)) -
                            (cr - p.b);
    detail::push_residual(rep, "dual.boundary_equation", root_res, 1e-12);

    const DualFunction dual(p, k, fb);
    const DualEval at_zb = dual.eval(fb.z_b);
    const DualEval at_z0 = dual.eval(fb.z_0);
    if (k.regime == Regime::LowConsumption) {
        detail::push_residual(rep, "dual.pasting_value_at_zb",
                              at_zb.value - (1.0 - p.b * fb.z_b), 1e-10);
        detail::push_residual(rep, "dual.pasting_slope_at_zb", at_zb.slope + p.b, 1e-10);
    } else {
        // continuity of value and slope across the transition boundary
        const double u1 = std::pow(1.0, t.a1);  // z == z_b on the lower branch
        const double low_value = 1.0 + (cr - p.b) * (fb.z_b / t.a1) * u1 - cr * fb.z_b;
        const double low_slope = (cr - p.b) - cr;
        detail::push_residual(rep, "dual.pasting_value_at_zb", at_zb.value - low_value, 1e-10);
        detail::push_residual(rep, "dual.pasting_slope_at_zb", at_zb.slope - low_slope, 1e-10);
        detail::push_residual(rep, "dual.value_at_origin", dual.value(0.0) - 1.0, 1e-12);
    }
    detail::push_residual(rep, "dual.pasting_value_at_z0", at_z0.value, 1e-10);
    detail::push_residual(rep, "dual.pasting_slope_at_z0", at_z0.slope, 1e-10);

    if (k.regime == Regime::LowConsumption) {
        // algebraic forms of z_b < 1/b and z_0 > 1/b
        const double zb0 = fb.z_b0;
        const double ineq_lower = t.w1 * std::pow(zb0, t.a1 - 1.0) +
                                  t.w2 * std::pow(zb0, t.a2 - 1.0) - 1.0;
        const double ineq_upper = 1.0 + t.cfac * (std::pow(zb0, t.a1) - std::pow(zb0, t.a2)) -
                                  t.s1 * std::pow(zb0, t.a1 - 1.0) -
                                  t.s2 * std::pow(zb0, t.a2 - 1.0);
        detail::push_slack(rep, "dual.zb_below_goal_reciprocal", ineq_lower, 0.0);
        detail::push_slack(rep, "dual.z0_above_goal_reciprocal", ineq_upper, 0.0);
        detail::push_slack(rep, "dual.boundary_order",
                           std::min(1.0 / p.b - fb.z_b, fb.z_0 - 1.0 / p.b), 0.0);
    }

    double worst_ode = 0.0;
    double min_curv = std::numeric_limits<double>::infinity();
    double max_slope = -std::numeric_limits<double>::infinity();
    const double lo = dual.domain_lo(), hi = dual.domain_hi();
    const std::size_t n = 1000;
    for (std::size_t i = 1; i < n; ++i) {
        const double z = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
        if (k.regime == Regime::HighConsumption &&
            std::abs(z - fb.z_b) < (hi - lo) * 1e-9)
            continue;
        const DualEval e = dual.eval(z);
        const double source = k.regime == Regime::HighConsumption && z <= fb.z_b ? p.lambda : 0.0;
        const double res = p.lambda * e.value - (p.lambda - p.r) * z * e.slope -
                           k.m * dual.scaled_curvature(z) + p.c * z - source;
        worst_ode = std::max(worst_ode, std::abs(res));
        min_curv = std::min(min_curv, e.curvature());
        max_slope = std::max(max_slope, e.slope);
    }
    detail::push_residual(rep, "dual.ode_residual_max", worst_ode, 1e-8);
    detail::push_slack(rep, "dual.convexity_min_curvature", min_curv, 0.0);
    detail::push_residual(rep, "dual.slope_nonpositive_max", std::max(max_slope, 0.0), 1e-15);
}

}  // namespace bequest
