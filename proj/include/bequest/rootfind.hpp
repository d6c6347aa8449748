#pragma once

#include <cmath>
#include <string>

#include "bequest/errors.hpp"

namespace bequest {

/// Root of a strictly increasing function on [lo, hi]: bisection down to a
/// few ulps, then a short Newton polish that is never allowed to leave the
/// bracket. The endpoints must straddle zero, otherwise NoBracket is thrown.
template <class F, class DF>
double solve_increasing(F&& f, DF&& df, double lo, double hi, const char* what = "root") {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo > 0.0 || fhi < 0.0)
        throw NoBracket(std::string(what) + ": endpoint values do not straddle the target");

    double a = lo, b = hi;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;  // interval exhausted at this precision
        const double fm = f(mid);
        if (fm < 0.0)
            a = mid;
        else
            b = mid;
    }

    double x = 0.5 * (a + b);
    for (int i = 0; i < 4; ++i) {
        const double fx = f(x);
        const double d = df(x);
        if (!(d > 0.0) || !std::isfinite(d)) break;
        const double xn = x - fx / d;
        if (!(xn > a) || !(xn < b)) break;
        if (xn == x) break;
        x = xn;
    }
    return x;
}

/// Derivative-free variant; bisection only.
template <class F>
double solve_increasing(F&& f, double lo, double hi, const char* what = "root") {
    return solve_increasing(f, [](double) { return 0.0; }, lo, hi, what);
}

}  // namespace bequest
