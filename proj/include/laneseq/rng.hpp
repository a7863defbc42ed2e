#pragma once
// Deterministic, platform-independent RNG streams (splitmix64).

#include <cmath>
#include <cstdint>
#include <string_view>

namespace laneseq {

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct SplitMix64 {
    uint64_t state = 0;
    bool has_spare = false;
    double spare = 0.0;

    SplitMix64() = default;
    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1), 53-bit resolution
    double unit() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * unit(); }

    // integer in [0, n), n > 0
    uint64_t below(uint64_t n) {
        return uint64_t((static_cast<__uint128_t>(next()) * n) >> 64);
    }

    // standard normal, Box-Muller
    double gaussian() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        double u1 = 1.0 - unit();  // (0,1]
        double u2 = unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare = r * std::sin(a);
        has_spare = true;
        return r * std::cos(a);
    }
};

// Independent stream derived from a global seed and a name tag.
inline SplitMix64 named_stream(uint64_t seed, std::string_view name) {
    SplitMix64 mix(seed ^ fnv1a64(name));
    mix.next();  // decorrelate nearby seeds
    return SplitMix64(mix.next());
}

// Stream keyed by (seed, name, index) for per-sample substreams.
inline SplitMix64 indexed_stream(uint64_t seed, std::string_view name, uint64_t index) {
    SplitMix64 mix(seed ^ fnv1a64(name));
    mix.state += 0x632be59bd9b4e019ULL * (index + 1);
    mix.next();
    return SplitMix64(mix.next());
}

}  // namespace laneseq
