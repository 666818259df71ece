#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace ranklab {

// SplitMix64. Every randomized behavior in the project draws from this
// generator so runs are reproducible bit-for-bit across platforms; std::
// distributions are implementation-defined and never used.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 mantissa bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Modulo bias is negligible at the pool sizes
    // used here.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; consumes exactly two uniforms per draw.
    double next_gaussian() {
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925287 * u2);
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t splitmix64_once(std::uint64_t x) {
    std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed and an index path,
// e.g. (master, set index, strategy index, trial index).
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64_once(master);
    for (std::uint64_t p : path) {
        s = splitmix64_once(s ^ splitmix64_once(p + 0x632BE59BD9B4E019ULL));
    }
    return s;
}

}  // namespace ranklab
