#pragma once

#include <cmath>
#include <cstdint>

namespace mvsk {

// SplitMix64: named counter-based 64-bit generator (Steele, Lea, Flood 2014).
// Chosen over std::mt19937_64 + distributions because instance files must
// regenerate bit-identically across standard libraries; the uniform and
// normal mappings below are pinned explicitly for the same reason.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform on [0,1) with 53 significant bits
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Box-Muller; one value consumed per call, the cosine leg only, so the
    // stream stays a pure function of the draw index
    double next_normal() {
        double u1 = next_unit(), u2 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    // Rademacher +-1, used by the Hutchinson trace probes
    double next_sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

private:
    std::uint64_t state_;
};

} // namespace mvsk
