#pragma once

#include <cmath>
#include <cstdint>

namespace stokes {

// Small counter-style generator (splitmix64). Cheap enough to seed one
// independent substream per cycle / trajectory / grid point, which keeps
// sampling deterministic under any evaluation order.
struct SplitMix64 {
    uint64_t state = 0;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in (0, 1]; never returns 0 so log(u) is safe
    double next_unit() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }

    uint64_t next_below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(next()) * n) >> 64);
    }
};

// Derive a substream seed from (seed, index).
inline uint64_t substream_seed(uint64_t seed, uint64_t index) {
    SplitMix64 g(seed ^ (0x632be59bd9b4e019ull + index * 0x9e3779b97f4a7c15ull));
    g.next();
    return g.next();
}

inline double sample_normal(SplitMix64& rng) {
    // Box-Muller, one value per call (the discarded partner keeps the draw
    // count per step fixed, which substream determinism relies on)
    const double u1 = rng.next_unit();
    const double u2 = rng.next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

inline int sample_poisson(SplitMix64& rng, double mean) {
    if (mean <= 0.0) return 0;
    // Knuth product method; means here are a few counts per pulse at most
    const double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
        p *= rng.next_unit();
        if (p <= limit) break;
        ++k;
    } while (k < 10000);
    return k;
}

// Bose-Einstein (thermal) photon number with the given mean.
inline int sample_thermal(SplitMix64& rng, double mean) {
    if (mean <= 0.0) return 0;
    const double ratio = mean / (1.0 + mean);
    return static_cast<int>(std::floor(std::log(rng.next_unit()) / std::log(ratio)));
}

inline int sample_binomial(SplitMix64& rng, int n, double p) {
    int k = 0;
    for (int i = 0; i < n; ++i)
        if (rng.next_unit() <= p) ++k;
    return k;
}

}  // namespace stokes
