#pragma once
// Seedable randomness with fully specified algorithms so that identical
// seeds reproduce identical artifacts byte for byte. Streams are derived
// with SplitMix64 and drawn from std::mt19937_64; bounded integers use
// rejection sampling and gaussians use Box-Muller, both implemented here
// rather than through std::*_distribution (whose output is
// implementation-defined).

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hypercqa {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mixes an ordered list of words into one stream seed.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) {
    std::uint64_t state = 0x8f2d1f3a9c56b04dULL;
    for (std::uint64_t w : words) {
        state ^= w;
        (void)splitmix64(state);
    }
    return splitmix64(state);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, n) by rejection; n must be positive.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t value;
        do {
            value = engine_();
        } while (value >= limit);
        return value % n;
    }

    // Uniform double in [0, 1) with 53 bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Standard gaussian via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 1e-300) u1 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace hypercqa
