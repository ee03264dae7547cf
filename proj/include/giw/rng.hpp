#pragma once

#include <cstdint>

namespace giw {

// SplitMix64. Seeded runs must reproduce bit-for-bit on every platform, so we
// avoid <random> distributions (their output is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n). Fixed-point multiply keeps the draw sequence portable.
    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Uniform in [lo, hi], inclusive.
    std::uint32_t range(std::uint32_t lo, std::uint32_t hi) {
        return lo + below(hi - lo + 1);
    }

    // True with probability num/den.
    bool chance(std::uint32_t num, std::uint32_t den) { return below(den) < num; }

private:
    std::uint64_t state_;
};

} // namespace giw
