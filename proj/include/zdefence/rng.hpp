#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "zdefence/errors.hpp"

namespace zdefence {

// All randomness in the toolkit flows through this wrapper around
// std::mt19937_64, whose raw output sequence is fully specified by the
// standard. Bounded draws are done by modulo rejection on the raw stream
// instead of std::uniform_int_distribution, so the same seed produces the
// same values on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Unbiased draw from [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw std::logic_error("Rng::below: zero bound");
        std::uint64_t x, r;
        do {
            x = next();
            r = x % bound;
        } while (x - r > UINT64_MAX - (bound - 1));
        return r;
    }

    // Inclusive range.
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw std::logic_error("Rng::range: lo > hi");
        return lo + static_cast<std::int64_t>(
                        below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Uniform double in [0, 1) with 53 random bits.
    double real01() { return (next() >> 11) * 0x1.0p-53; }

    // Index into a cumulative distribution (ascending, last entry ~1.0).
    std::size_t pick_cdf(const std::vector<double>& cdf) {
        if (cdf.empty()) throw std::logic_error("Rng::pick_cdf: empty cdf");
        double u = real01();
        std::size_t lo = 0, hi = cdf.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (u < cdf[mid]) hi = mid; else lo = mid + 1;
        }
        return lo;
    }

private:
    std::mt19937_64 engine_;
};

// FNV-1a, used both for stable content hashes in manifests and for deriving
// per-stage seeds from a single top-level seed.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Stage seed = splitmix64(top_seed XOR fnv1a64(stage_tag)). Documented so a
// reimplementation can reproduce every stream from the one seed in a config.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
    return splitmix64(seed ^ fnv1a64(stage));
}

}  // namespace zdefence
