#pragma once

#include <cmath>
#include <cstdint>

namespace bequest {

/// Deterministic per-path random stream: a splitmix64 counter sequence whose
/// starting state is a strong hash of (seed, path index). Two different path
/// indices land in unrelated stretches of the counter space, so results do
/// not depend on how paths are distributed over threads.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path)
        : state_(mix(seed + kGamma) ^ mix(path * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL)) {}

    std::uint64_t next_u64() { return mix(state_ += kGamma); }

    /// Uniform in (0, 1]; never 0, so logarithms are safe.
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via the Marsaglia polar method; the spare deviate of
    /// each accepted pair is cached.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_unit() - 1.0;
            v = 2.0 * next_unit() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double next_exponential(double rate) { return -std::log(next_unit()) / rate; }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace bequest
