#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <thread>
#include <vector>

#include "bequest/errors.hpp"
#include "bequest/model.hpp"
#include "bequest/rng.hpp"
#include "bequest/solve.hpp"

namespace bequest {

/// Simulation controls. The strategy is any feedback map w -> dollar amount in
/// the risky asset; it is queried only at wealths strictly inside (0, w_safe)
/// because absorption is checked before the next step.
struct SimConfig {
    std::int64_t n_paths = 100000;
    double dt = 1e-3;            ///< years; must satisfy 0 < dt <= 1/252
    std::uint64_t seed = 1;
    double horizon_cap = 0.0;    ///< max simulated years; <= 0 picks 50/lambda
    int n_threads = 0;           ///< 0 = hardware concurrency
    std::function<double(double)> strategy;
};

/// Outcome counts and the success-probability estimate. A path succeeds by
/// dying with wealth at or above the goal or by reaching the safe level
/// (from which the goal is met with certainty). Capped paths count as
/// failures; with the default horizon their probability mass is ~e^-50.
struct SimResult {
    double p_hat = 0.0;
    double std_err = 0.0;
    std::int64_t n_paths = 0;
    std::int64_t n_ruined = 0;
    std::int64_t n_died_below_goal = 0;
    std::int64_t n_died_meeting_goal = 0;
    std::int64_t n_hit_safe = 0;
    std::int64_t n_capped = 0;
};

namespace detail {

inline double resolve_horizon(const ModelParams& p, const SimConfig& cfg) {
    const double cap = cfg.horizon_cap <= 0.0 ? 50.0 / p.lambda : cfg.horizon_cap;
    if (cfg.n_paths < 1) throw ConfigError("SimConfig: n_paths must be at least 1");
    if (!(cfg.dt > 0.0) || !(cfg.dt <= 1.0 / 252.0))
        throw ConfigError("SimConfig: dt must lie in (0, 1/252]");
    if (!(cap >= 10.0 / p.lambda))
        throw ConfigError("SimConfig: horizon_cap must be at least 10/lambda");
    return cap;
}

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

struct PathCounts {
    std::int64_t ruined = 0, died_below = 0, died_meeting = 0, hit_safe = 0, capped = 0;
    void operator+=(const PathCounts& o) {
        ruined += o.ruined;
        died_below += o.died_below;
        died_meeting += o.died_meeting;
        hit_safe += o.hit_safe;
        capped += o.capped;
    }
};

// Euler-Maruyama walk of one path; absorption checked after every step, death
// drawn up front (memoryless lifetimes make that equivalent to killing the
// path step by step) and realized with a final partial step.
template <class Strategy>
inline void run_path(const ModelParams& p, const DerivedConstants& k, const Strategy& strategy,
                     double w0, double dt, double horizon, PathRng& rng, PathCounts& counts) {
    double w = w0;
    if (w <= 0.0) {
        ++counts.ruined;
        return;
    }
    if (w >= k.w_safe) {
        ++counts.hit_safe;
        return;
    }
    const double tau_d = rng.next_exponential(p.lambda);
    const double excess = p.mu - p.r;
    const double sqrt_dt = std::sqrt(dt);
    double t = 0.0;
    for (;;) {
        double h = dt, root_h = sqrt_dt;
        bool dying = false;
        if (t + dt >= tau_d) {
            h = tau_d - t;
            root_h = std::sqrt(h);
            dying = true;
        }
        const double pi = strategy(w);
        w += (p.r * w + excess * pi - p.c) * h + p.sigma * pi * root_h * rng.next_normal();
        t += h;
        if (w <= 0.0) {
            ++counts.ruined;
            return;
        }
        if (w >= k.w_safe) {
            ++counts.hit_safe;
            return;
        }
        if (dying) {
            if (w >= p.b)
                ++counts.died_meeting;
            else
                ++counts.died_below;
            return;
        }
        if (t >= horizon) {
            ++counts.capped;
            return;
        }
    }
}

}  // namespace detail

/// Simulates the controlled wealth dynamics
///     dW = (r*W + (mu - r)*pi(W) - c) dt + sigma*pi(W) dB
/// from w0 under an exponential lifetime, estimating the probability that
/// wealth at the end of the game meets the goal. Results are a deterministic
/// function of (seed, n_paths, dt) independent of the thread count, because
/// every path owns a stream keyed by its index.
template <class Strategy>
SimResult simulate(const ModelParams& p, const SimConfig& cfg, double w0, const Strategy& strategy) {
    const double horizon = detail::resolve_horizon(p, cfg);
    if (!(w0 >= 0.0)) throw ConfigError("simulate: w0 must be nonnegative");
    const DerivedConstants k = derive_constants(p);
    const int n_threads =
        static_cast<int>(std::min<std::int64_t>(detail::resolve_threads(cfg.n_threads), cfg.n_paths));

    std::vector<detail::PathCounts> partial(static_cast<std::size_t>(n_threads));
    auto worker = [&](int ti) {
        const std::int64_t lo = cfg.n_paths * ti / n_threads;
        const std::int64_t hi = cfg.n_paths * (ti + 1) / n_threads;
        detail::PathCounts local;
        for (std::int64_t i = lo; i < hi; ++i) {
            PathRng rng(cfg.seed, static_cast<std::uint64_t>(i));
            detail::run_path(p, k, strategy, w0, cfg.dt, horizon, rng, local);
        }
        partial[static_cast<std::size_t>(ti)] = local;
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int ti = 1; ti < n_threads; ++ti) threads.emplace_back(worker, ti);
    worker(0);
    for (auto& th : threads) th.join();

    detail::PathCounts total;
    for (const auto& c : partial) total += c;

    SimResult res;
    res.n_paths = cfg.n_paths;
    res.n_ruined = total.ruined;
    res.n_died_below_goal = total.died_below;
    res.n_died_meeting_goal = total.died_meeting;
    res.n_hit_safe = total.hit_safe;
    res.n_capped = total.capped;
    const double n = static_cast<double>(cfg.n_paths);
    res.p_hat = static_cast<double>(total.died_meeting + total.hit_safe) / n;
    res.std_err = std::sqrt(res.p_hat * (1.0 - res.p_hat) / n);
    return res;
}

/// Type-erased overload using the strategy stored in the config.
inline SimResult simulate(const ModelParams& p, const SimConfig& cfg, double w0) {
    if (!cfg.strategy) throw ConfigError("simulate: config carries no strategy");
    return simulate(p, cfg, w0, cfg.strategy);
}

// ---------------------------------------------------------------------------
// Optimal-strategy feedback maps for the simulator
// ---------------------------------------------------------------------------

/// Exact optimal feedback for c == 0: a fixed multiple of wealth.
struct LinearStrategy {
    double slope;
    double operator()(double w) const { return slope * w; }
};

inline LinearStrategy optimal_strategy_zero_c(const Solution& sol) {
    if (sol.regime() != Regime::ZeroConsumption)
        throw RegimeError("optimal_strategy_zero_c: applies to c == 0 only");
    return {sol.params().risk_ratio() / (1.0 - sol.constants().q)};
}

/// Piecewise-linear table of the optimal amount on [0, b], with the exact
/// closed form above the goal in the HighConsumption regime. Keeps the
/// per-step cost flat instead of paying a dual inversion every step. At the
/// HighConsumption kink the left value is used, matching Solution::pi.
class TabulatedStrategy {
public:
    explicit TabulatedStrategy(const Solution& sol, std::size_t knots = 4096)
        : upper_(sol.params().b), inv_h_(static_cast<double>(knots) / sol.params().b) {
        const ModelParams& p = sol.params();
        values_.resize(knots + 1);
        for (std::size_t i = 0; i <= knots; ++i) {
            const double w = p.b * static_cast<double>(i) / static_cast<double>(knots);
            values_[i] = sol.pi(std::min(w, p.b));
        }
        if (sol.regime() == Regime::HighConsumption) {
            high_ = true;
            cr_ = p.c / p.r;
            coeff_ = p.risk_ratio() * (sol.constants().alpha1 - 1.0);
        }
    }

    double operator()(double w) const {
        if (high_ && w > upper_) return coeff_ * (cr_ - w);
        if (w >= upper_) return values_.back();
        if (w <= 0.0) return values_.front();
        const double x = w * inv_h_;
        const auto i = static_cast<std::size_t>(x);
        const double frac = x - static_cast<double>(i);
        return values_[i] + frac * (values_[i + 1] - values_[i]);
    }

private:
    std::vector<double> values_;
    double upper_;
    double inv_h_;
    bool high_ = false;
    double cr_ = 0.0;
    double coeff_ = 0.0;
};

// ---------------------------------------------------------------------------
// Zero-consumption diagnostics
// ---------------------------------------------------------------------------

/// Ensemble statistics for the c == 0 optimal dynamics, where ruin should be
/// impossible and wealth is geometric with drift r + 2m/(1-q) and volatility
/// ((mu-r)/sigma)/(1-q).
struct NoRuinReport {
    SimResult sim;
    std::int64_t n_increments = 0;
    double mean_log_increment = 0.0;
    double se_mean = 0.0;
    double var_log_increment = 0.0;
    double se_var = 0.0;
    double expected_mean = 0.0;  ///< (growth - vol^2/2) * dt
    double expected_var = 0.0;   ///< vol^2 * dt
};

/// Runs the c == 0 ensemble under the optimal strategy, counting ruins and
/// accumulating log-wealth increments. Only whole-dt steps enter the moment
/// estimates, and at most max_increments per path are collected so the
/// standard errors stay meaningful against the O(dt^2) scheme bias.
inline NoRuinReport check_no_ruin_zero_c(const ModelParams& p, const SimConfig& cfg, double w0,
                                         std::int64_t max_increments_total = 8000000) {
    if (p.c != 0.0) throw RegimeError("check_no_ruin_zero_c: applies to c == 0 only");
    const double horizon = detail::resolve_horizon(p, cfg);
    const Solution sol = Solution::solve(p);
    const LinearStrategy strategy = optimal_strategy_zero_c(sol);
    const DerivedConstants k = sol.constants();
    const std::int64_t per_path =
        std::max<std::int64_t>(1, max_increments_total / std::max<std::int64_t>(1, cfg.n_paths));

    const int n_threads =
        static_cast<int>(std::min<std::int64_t>(detail::resolve_threads(cfg.n_threads), cfg.n_paths));
    struct Acc {
        detail::PathCounts counts;
        double sum = 0.0, sumsq = 0.0;
        std::int64_t n = 0;
    };
    std::vector<Acc> partial(static_cast<std::size_t>(n_threads));

    auto worker = [&](int ti) {
        const std::int64_t lo = cfg.n_paths * ti / n_threads;
        const std::int64_t hi = cfg.n_paths * (ti + 1) / n_threads;
        Acc acc;
        const double sqrt_dt = std::sqrt(cfg.dt);
        for (std::int64_t i = lo; i < hi; ++i) {
            PathRng rng(cfg.seed, static_cast<std::uint64_t>(i));
            double w = w0;
            if (w <= 0.0) {
                ++acc.counts.ruined;
                continue;
            }
            if (w >= k.w_safe) {
                ++acc.counts.hit_safe;
                continue;
            }
            const double tau_d = rng.next_exponential(p.lambda);
            double t = 0.0;
            std::int64_t taken = 0;
            for (;;) {
                double h = cfg.dt, root_h = sqrt_dt;
                bool dying = false;
                if (t + cfg.dt >= tau_d) {
                    h = tau_d - t;
                    root_h = std::sqrt(h);
                    dying = true;
                }
                const double prev = w;
                const double pi = strategy(w);
                w += (p.r * w + (p.mu - p.r) * pi) * h + p.sigma * pi * root_h * rng.next_normal();
                t += h;
                if (!dying && taken < per_path && w > 0.0) {
                    const double inc = std::log(w / prev);
                    acc.sum += inc;
                    acc.sumsq += inc * inc;
                    ++acc.n;
                    ++taken;
                }
                if (w <= 0.0) {
                    ++acc.counts.ruined;
                    break;
                }
                if (w >= k.w_safe) {
                    ++acc.counts.hit_safe;
                    break;
                }
                if (dying) {
                    if (w >= p.b)
                        ++acc.counts.died_meeting;
                    else
                        ++acc.counts.died_below;
                    break;
                }
                if (t >= horizon) {
                    ++acc.counts.capped;
                    break;
                }
            }
        }
        partial[static_cast<std::size_t>(ti)] = acc;
    };
    std::vector<std::thread> threads;
    for (int ti = 1; ti < n_threads; ++ti) threads.emplace_back(worker, ti);
    worker(0);
    for (auto& th : threads) th.join();

    Acc total;
    for (const auto& a : partial) {
        total.counts += a.counts;
        total.sum += a.sum;
        total.sumsq += a.sumsq;
        total.n += a.n;
    }

    NoRuinReport rep;
    rep.sim.n_paths = cfg.n_paths;
    rep.sim.n_ruined = total.counts.ruined;
    rep.sim.n_died_below_goal = total.counts.died_below;
    rep.sim.n_died_meeting_goal = total.counts.died_meeting;
    rep.sim.n_hit_safe = total.counts.hit_safe;
    rep.sim.n_capped = total.counts.capped;
    const double n_paths = static_cast<double>(cfg.n_paths);
    rep.sim.p_hat =
        static_cast<double>(total.counts.died_meeting + total.counts.hit_safe) / n_paths;
    rep.sim.std_err = std::sqrt(rep.sim.p_hat * (1.0 - rep.sim.p_hat) / n_paths);

    rep.n_increments = total.n;
    if (total.n > 1) {
        const double n = static_cast<double>(total.n);
        rep.mean_log_increment = total.sum / n;
        rep.var_log_increment =
            (total.sumsq - total.sum * total.sum / n) / (n - 1.0);
        rep.se_mean = std::sqrt(rep.var_log_increment / n);
        rep.se_var = rep.var_log_increment * std::sqrt(2.0 / (n - 1.0));
    }
    const double growth = p.r + 2.0 * k.m / (1.0 - k.q);
    const double vol = (p.mu - p.r) / p.sigma / (1.0 - k.q);
    rep.expected_mean = (growth - 0.5 * vol * vol) * cfg.dt;
    rep.expected_var = vol * vol * cfg.dt;
    return rep;
}

/// Hitting-time transform check for c == 0: with no mortality in the dynamics,
/// E[e^{-lambda * tau_safe}] equals the goal-reaching probability phi(w0).
/// Paths that have not reached the safe level by the horizon contribute 0,
/// understating the mean by at most e^{-lambda * horizon}.
struct LaplaceReport {
    double estimate = 0.0;
    double std_err = 0.0;
    double expected = 0.0;  ///< phi(w0)
    std::int64_t n_hit = 0;
    std::int64_t n_capped = 0;
};

inline LaplaceReport laplace_hitting_check(const ModelParams& p, const SimConfig& cfg, double w0) {
    if (p.c != 0.0) throw RegimeError("laplace_hitting_check: applies to c == 0 only");
    const double horizon = detail::resolve_horizon(p, cfg);
    const Solution sol = Solution::solve(p);
    const LinearStrategy strategy = optimal_strategy_zero_c(sol);
    const double w_safe = sol.w_safe();

    const int n_threads =
        static_cast<int>(std::min<std::int64_t>(detail::resolve_threads(cfg.n_threads), cfg.n_paths));
    struct Acc {
        double sum = 0.0, sumsq = 0.0;
        std::int64_t hit = 0, capped = 0;
    };
    std::vector<Acc> partial(static_cast<std::size_t>(n_threads));
    auto worker = [&](int ti) {
        const std::int64_t lo = cfg.n_paths * ti / n_threads;
        const std::int64_t hi = cfg.n_paths * (ti + 1) / n_threads;
        Acc acc;
        const double sqrt_dt = std::sqrt(cfg.dt);
        for (std::int64_t i = lo; i < hi; ++i) {
            PathRng rng(cfg.seed, static_cast<std::uint64_t>(i));
            double w = w0, t = 0.0, x = 0.0;
            for (;;) {
                if (w >= w_safe) {
                    x = std::exp(-p.lambda * t);
                    ++acc.hit;
                    break;
                }
                if (t >= horizon || w <= 0.0) {
                    ++acc.capped;
                    break;
                }
                const double pi = strategy(w);
                w += (p.r * w + (p.mu - p.r) * pi) * cfg.dt +
                     p.sigma * pi * sqrt_dt * rng.next_normal();
                t += cfg.dt;
            }
            acc.sum += x;
            acc.sumsq += x * x;
        }
        partial[static_cast<std::size_t>(ti)] = acc;
    };
    std::vector<std::thread> threads;
    for (int ti = 1; ti < n_threads; ++ti) threads.emplace_back(worker, ti);
    worker(0);
    for (auto& th : threads) th.join();

    Acc total;
    for (const auto& a : partial) {
        total.sum += a.sum;
        total.sumsq += a.sumsq;
        total.hit += a.hit;
        total.capped += a.capped;
    }
    LaplaceReport rep;
    const double n = static_cast<double>(cfg.n_paths);
    rep.estimate = total.sum / n;
    const double var = (total.sumsq - total.sum * total.sum / n) / (n - 1.0);
    rep.std_err = std::sqrt(std::max(var, 0.0) / n);
    rep.expected = sol.phi(w0);
    rep.n_hit = total.hit;
    rep.n_capped = total.capped;
    return rep;
}

// ---------------------------------------------------------------------------
// Residual of the dynamic-programming equation
// ---------------------------------------------------------------------------

/// Uniform grid of n points strictly inside (0, w_safe), skipping the goal
/// itself in the HighConsumption regime (the value function is only C^1
/// there, so pointwise residuals are one-sided).
inline std::vector<double> interior_grid(const Solution& sol, std::size_t n) {
    std::vector<double> g;
    g.reserve(n);
    const double ws = sol.w_safe();
    const bool skip_goal = sol.regime() == Regime::HighConsumption;
    for (std::size_t i = 1; i <= n; ++i) {
        const double w = ws * static_cast<double>(i) / static_cast<double>(n + 1);
        if (skip_goal && std::abs(w - sol.params().b) < 1e-9 * ws) continue;
        g.push_back(w);
    }
    return g;
}

/// Max absolute residual of
///     lambda*(phi - 1{w >= b}) - (r*w - c)*phi_w - m*(-phi_w^2/phi_ww)
/// over the grid, the maximization over the investment amount already folded
/// into the quadratic term at its analytic optimum.
inline double hjb_residual(const Solution& sol, std::span<const double> w_grid) {
    const ModelParams& p = sol.params();
    const DerivedConstants& k = sol.constants();
    double worst = 0.0;
    for (double w : w_grid) {
        const double z = sol.marginal_value(w);
        const double risk = sol.risk_term(w);
        const double indicator = w >= p.b ? 1.0 : 0.0;
        const double res =
            (p.r * w - p.c) * z + k.m * risk - p.lambda * (sol.phi(w) - indicator);
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

}  // namespace bequest
