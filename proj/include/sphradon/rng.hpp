#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sphradon {

/// Counter-based generator: draw k is SplitMix64 applied to seed + k * golden
/// gamma, so every draw is a pure function of (seed, k) and identical on all
/// platforms.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t counter) const {
        std::uint64_t z = seed_ + (counter + 1) * 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    /// Standard normal draw k via Box-Muller; draws 2m and 2m+1 share one uniform pair.
    double normal(std::uint64_t k) const {
        const std::uint64_t pair = k / 2;
        const double u1 = 1.0 - uniform(2 * pair);  // (0, 1]
        const double u2 = uniform(2 * pair + 1);
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        return (k % 2 == 0) ? rad * std::cos(ang) : rad * std::sin(ang);
    }

private:
    std::uint64_t seed_;
};

} // namespace sphradon
