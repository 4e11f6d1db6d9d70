#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace pavg {

// Fixed-increment splitmix64 (Steele/Lea/Flood). Used both as a seed mixer and
// to derive independent stream seeds from one master seed.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// xoshiro256++ stream with deterministic gaussian/gamma sampling on top.
// All sampling algorithms are spelled out here (no <random> distributions)
// so that a (seed, draw sequence) pair produces identical bits on any
// standard library and platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64_next(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, 1), 53-bit resolution
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // standard normal via Box-Muller; the second value of each pair is cached
    double next_gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    // unbiased integer in [0, n) by rejection
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("next_below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    // Gamma(alpha, 1) via Marsaglia-Tsang squeeze; alpha < 1 handled by the
    // usual boost Gamma(alpha) = Gamma(alpha+1) * U^(1/alpha).
    double next_gamma(double alpha) {
        if (!(alpha > 0.0)) throw std::invalid_argument("next_gamma: alpha must be positive");
        if (alpha < 1.0) {
            double u = next_unit();
            while (u <= 0.0) u = next_unit();
            return next_gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = next_gaussian();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = next_unit();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
    bool have_cached_ = false;
    double cached_ = 0.0;
};

// Documented splitting rule: stream k of master seed s is seeded with
// mix(s + (k+1) * golden_gamma). Streams are independent of the order in
// which they are created or consumed, so parallel schedules cannot change
// the draws any worker sees.
inline RngStream derive_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::uint64_t st = master_seed + 0x9E3779B97F4A7C15ULL * stream_id;
    return RngStream(splitmix64_next(st));
}

} // namespace pavg
