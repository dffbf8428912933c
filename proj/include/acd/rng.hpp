// Deterministic seeding and sampling utilities.
//
// All stochastic inputs in the library are derived from a single master seed
// through a counter-based split (splitmix64 over a tagged stream), so results
// are reproducible bit-for-bit regardless of thread count or execution order.
#pragma once

#include <cstdint>
#include <cmath>

namespace acd {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Sub-seed for (seed, stream tag, index). Streams keep ensemble construction,
// energy realizations, test data etc. statistically independent.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = a ^ (0x6a09e667f3bcc909ULL + stream * 0x3c6ef372fe94f82bULL);
    std::uint64_t b = splitmix64(s);
    s = b + index * 0xbb67ae8584caa73bULL;
    return splitmix64(s);
}

// Uniform double in [0,1) from a 64-bit word (top 53 bits); avoids
// implementation-defined std::uniform_real_distribution behaviour.
inline double uniform01(std::uint64_t word) {
    return static_cast<double>(word >> 11) * 0x1.0p-53;
}

inline double uniform01_from_seed(std::uint64_t seed) {
    std::uint64_t s = seed;
    return uniform01(splitmix64(s));
}

// Inverse standard normal CDF (Acklam's rational approximation polished with
// one Halley step against erfc). Max error well below 1e-12 on (0,1).
double normal_quantile(double p);

// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

} // namespace acd
