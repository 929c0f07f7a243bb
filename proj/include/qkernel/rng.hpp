#pragma once

#include <cmath>
#include <cstdint>

namespace qkernel {

// SplitMix64 avalanche step. Used both as the mixing function for seed
// derivation and as the core of the counter-based generator below.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Splittable seed derivation: mix_seed(base, i, j) yields independent streams
// for every (i, j), so matrix assembly is schedule-independent.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(base ^ 0x6a09e667f3bcc908ULL);
    h = splitmix64(h ^ (a * 0xff51afd7ed558ccdULL + 1));
    h = splitmix64(h ^ (b * 0xc4ceb9fe1a85ec53ULL + 2));
    return h;
}

// Small deterministic PRNG (SplitMix64 sequence). Standard-library
// distributions are implementation-defined, so uniform and gaussian draws
// are generated here to keep artifacts bit-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        return splitmix64(state_++);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Multiply-high mapping; the O(n / 2^64) bias
    // is irrelevant at the n <= 15 used here.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) {
        return next_double() < p;
    }

    // Standard normal via Box-Muller (pair cached).
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace qkernel
