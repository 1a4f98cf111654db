#pragma once

#include <cstdint>

namespace sensim {

/// Counter-based RNG (splitmix64 core). Streams are keyed by hashing a seed
/// with arbitrary integer tags, so the stream for a pixel or edge depends
/// only on its identity and never on scheduling order.
class Rng {
public:
    explicit Rng(std::uint64_t state) : state_(state) {}

    static std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return split(h);
    }

    /// Builds a keyed stream: hash(seed, tags...).
    template <typename... Tags>
    static Rng keyed(std::uint64_t seed, Tags... tags) {
        std::uint64_t h = split(seed + 0x9e3779b97f4a7c15ull);
        ((h = mix(h, static_cast<std::uint64_t>(tags))), ...);
        return Rng(h);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return split(state_);
    }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

private:
    static std::uint64_t split(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace sensim
