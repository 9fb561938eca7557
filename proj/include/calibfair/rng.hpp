#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace calibfair {

// SplitMix64 finalizer, used to derive independent sub-seeds from one
// master seed. Distinct tags give uncorrelated streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic RNG wrapper. std::mt19937_64 output is pinned by the
// standard; the distributions below are implemented by hand so the same
// seed gives the same stream on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Multiply-shift; bias is below 2^-40 for
    // the ranges used here.
    std::uint64_t bounded(std::uint64_t n) {
        if (n <= 1) return 0;
        unsigned __int128 wide = static_cast<unsigned __int128>(engine_()) * n;
        return static_cast<std::uint64_t>(wide >> 64);
    }

    // Standard normal via Marsaglia's polar method (no trig calls).
    double gaussian() {
        for (;;) {
            double u = 2.0 * uniform() - 1.0;
            double v = 2.0 * uniform() - 1.0;
            double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                return u * std::sqrt(-2.0 * std::log(s) / s);
            }
        }
    }

    // Fisher-Yates with the bounded() draw above.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace calibfair
