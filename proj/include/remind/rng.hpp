#pragma once

#include <cstdint>

namespace remind {

// Counter-based deterministic randomness built on the SplitMix64 finalizer.
// Every draw is a pure function of the key material, so results do not
// depend on call order, thread scheduling, or how many draws other
// components consumed. This is the single generator family used across
// the toolkit (perturbation, synthetic oracles, dataset shuffling).
namespace rng {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Folds one more key component into a hash state.
inline uint64_t mix(uint64_t state, uint64_t key) {
    return splitmix64(state ^ splitmix64(key));
}

inline uint64_t hash_bytes(uint64_t state, const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = state;
    uint64_t word = 0;
    size_t shift = 0;
    for (size_t i = 0; i < len; ++i) {
        word |= static_cast<uint64_t>(p[i]) << shift;
        shift += 8;
        if (shift == 64) {
            h = mix(h, word);
            word = 0;
            shift = 0;
        }
    }
    if (shift != 0) h = mix(h, word | (0x01ULL << shift));
    return mix(h, len);
}

// Uniform double in [0, 1) from 53 high bits.
inline double to_unit_double(uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Uniform double in [-1, 1).
inline double to_signed_unit(uint64_t h) {
    return 2.0 * to_unit_double(h) - 1.0;
}

// Uniform integer in [lo, hi] by rejection-free scaling (bias is
// negligible for the small ranges used here, but we reject anyway
// to keep draws exactly uniform).
inline uint64_t to_range(uint64_t h, uint64_t lo, uint64_t hi) {
    const uint64_t span = hi - lo + 1;
    uint64_t x = h;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    // Re-mix until below the rejection limit; terminates almost surely.
    while (x >= limit) x = splitmix64(x);
    return lo + x % span;
}

}  // namespace rng

// A keyed stream: successive draws are splitmix64 walks from a key built
// out of the caller's coordinates (seed, variant, position, ...).
class CounterRng {
public:
    explicit CounterRng(uint64_t key) : state_(rng::splitmix64(key)) {}

    static CounterRng keyed(uint64_t seed, uint64_t a = 0, uint64_t b = 0, uint64_t c = 0) {
        uint64_t h = rng::splitmix64(seed);
        h = rng::mix(h, a);
        h = rng::mix(h, b);
        h = rng::mix(h, c);
        return CounterRng(h);
    }

    uint64_t next() {
        state_ = rng::splitmix64(state_);
        return state_;
    }

    double next_unit() { return rng::to_unit_double(next()); }
    double next_signed_unit() { return rng::to_signed_unit(next()); }
    uint64_t next_range(uint64_t lo, uint64_t hi) { return rng::to_range(next(), lo, hi); }
    bool next_bernoulli(double p) { return next_unit() < p; }

private:
    uint64_t state_;
};

}  // namespace remind
