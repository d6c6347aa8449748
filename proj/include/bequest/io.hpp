#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "bequest/model.hpp"
#include "bequest/solve.hpp"

namespace bequest {

inline constexpr const char* kToolVersion = "bequest 1.0.0";
inline constexpr int kSchemaVersion = 1;

/// Shortest text keeping 17 significant digits; C locale, so the decimal
/// separator is always '.'.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct GridSpec {
    std::size_t count = 101;
    double lo = 0.0;
    double hi = -1.0;  ///< < 0 means w_safe

    void validate(double w_safe) const {
        if (count < 2) throw std::invalid_argument("grid: need at least 2 points");
        const double h = hi < 0.0 ? w_safe : hi;
        if (!(lo >= 0.0) || !(h <= w_safe * (1.0 + 1e-12)) || !(lo < h))
            throw std::invalid_argument("grid: bounds must satisfy 0 <= lo < hi <= w_safe");
    }
};

/// Evaluates the solution on the grid. In the HighConsumption regime a grid
/// that spans the goal gets two rows at w = b carrying the one-sided amounts,
/// left side first.
inline std::vector<StrategyPoint> tabulate(const Solution& sol, const GridSpec& grid) {
    grid.validate(sol.w_safe());
    const double hi = grid.hi < 0.0 ? sol.w_safe() : grid.hi;
    const double b = sol.params().b;
    const bool kinked = sol.regime() == Regime::HighConsumption && grid.lo < b && b < hi;

    std::vector<StrategyPoint> rows;
    rows.reserve(grid.count + 2);
    bool kink_emitted = false;
    auto emit_kink = [&]() {
        const auto [left, right] = sol.pi_at_goal();
        const double phi_b = sol.phi(b);
        rows.push_back({b, phi_b, left, sol.dual_variable(b)});
        rows.push_back({b, phi_b, right, std::nullopt});
        kink_emitted = true;
    };
    for (std::size_t i = 0; i < grid.count; ++i) {
        const double w =
            grid.lo + (hi - grid.lo) * static_cast<double>(i) / static_cast<double>(grid.count - 1);
        if (kinked && !kink_emitted && w >= b) emit_kink();
        if (kinked && w == b) continue;  // replaced by the two one-sided rows
        rows.push_back(sol.at(w));
    }
    if (kinked && !kink_emitted) emit_kink();
    return rows;
}

inline std::string table_csv(const Solution& sol, const std::vector<StrategyPoint>& rows) {
    const ModelParams& p = sol.params();
    const DerivedConstants& k = sol.constants();
    std::string out;
    out += "# schema=1\n";
    out += std::string("# tool=") + kToolVersion + "\n";
    out += "# mu=" + fmt17(p.mu) + " r=" + fmt17(p.r) + " sigma=" + fmt17(p.sigma) +
           " lambda=" + fmt17(p.lambda) + " c=" + fmt17(p.c) + " b=" + fmt17(p.b) + "\n";
    out += std::string("# regime=") + to_string(k.regime) + " m=" + fmt17(k.m) +
           " q=" + fmt17(k.q) + " alpha1=" + fmt17(k.alpha1) + " alpha2=" + fmt17(k.alpha2) +
           " p=" + fmt17(k.p) + " w_safe=" + fmt17(k.w_safe) + "\n";
    if (sol.boundaries()) {
        const auto& fb = *sol.boundaries();
        out += "# z_b0=" + fmt17(fb.z_b0) + " z_b=" + fmt17(fb.z_b) + " z_0=" + fmt17(fb.z_0) +
               "\n";
    }
    out += "w,phi,pi_star,z\n";
    for (const auto& r : rows) {
        out += fmt17(r.w) + "," + fmt17(r.phi) + "," + fmt17(r.pi_star) + ",";
        if (r.z) out += fmt17(*r.z);
        out += "\n";
    }
    return out;
}

inline nlohmann::ordered_json params_json(const ModelParams& p) {
    return {{"mu", p.mu},     {"r", p.r}, {"sigma", p.sigma},
            {"lambda", p.lambda}, {"c", p.c}, {"b", p.b}};
}

inline nlohmann::ordered_json constants_json(const DerivedConstants& k) {
    return {{"m", k.m},           {"q", k.q},   {"alpha1", k.alpha1}, {"alpha2", k.alpha2},
            {"p", k.p},           {"w_safe", k.w_safe}};
}

inline nlohmann::ordered_json table_json(const Solution& sol,
                                         const std::vector<StrategyPoint>& rows) {
    nlohmann::ordered_json doc;
    doc["schema"] = kSchemaVersion;
    doc["tool"] = kToolVersion;
    doc["params"] = params_json(sol.params());
    doc["regime"] = to_string(sol.regime());
    doc["constants"] = constants_json(sol.constants());
    if (sol.boundaries()) {
        const auto& fb = *sol.boundaries();
        doc["boundaries"] = {{"z_b0", fb.z_b0}, {"z_b", fb.z_b}, {"z_0", fb.z_0}};
    } else {
        doc["boundaries"] = nullptr;
    }
    auto& out_rows = doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json jr;
        jr["w"] = r.w;
        jr["phi"] = r.phi;
        jr["pi_star"] = r.pi_star;
        if (r.z)
            jr["z"] = *r.z;
        else
            jr["z"] = nullptr;
        out_rows.push_back(std::move(jr));
    }
    return doc;
}

}  // namespace bequest
