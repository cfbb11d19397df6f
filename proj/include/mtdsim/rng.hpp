#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mtdsim/errors.hpp"

namespace mtdsim {

// All randomness flows through rng_stream so that a (scenario, seed) pair
// reproduces bit-identical runs. std::uniform_int_distribution and friends
// are implementation-defined across standard libraries, so the draw logic
// is spelled out here instead.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a stream tag.
inline std::uint64_t derive_stream_seed(std::uint64_t base, std::uint64_t tag) {
    return splitmix64(base ^ splitmix64(tag));
}

class rng_stream {
public:
    explicit rng_stream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform index in [0, n). n must be positive.
    std::size_t pick_index(std::size_t n) {
        internal_check(n > 0, "rng_stream::pick_index called with n == 0");
        return static_cast<std::size_t>(next() % n);
    }

    /// Uniform double in (0, 1].
    double unit_positive() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1p-53;
    }

    /// Exponential draw with the given mean, always > 0.
    double exponential(double mean) {
        internal_check(mean > 0.0, "exponential draw requires mean > 0");
        return -mean * std::log(unit_positive());
    }

private:
    std::mt19937_64 gen_;
};

} // namespace mtdsim
