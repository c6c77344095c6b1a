#pragma once

#include <cmath>
#include <cstdint>

#include "astm/errors.hpp"

// Deterministic random streams. Everything is built on splitmix64 so that
// runs are bit-identical across platforms and compilers; std <random>
// distributions are deliberately avoided (their algorithms are
// implementation-defined).

namespace astm {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// One splitmix64 step: advances `state` and returns the next output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += kGolden);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Stateless scramble of a single 64-bit value.
inline std::uint64_t scramble(std::uint64_t x) {
    std::uint64_t s = x;
    return splitmix64(s);
}

/// Derives an independent sub-seed from (seed, label).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) {
    return scramble(scramble(seed) ^ scramble(label ^ 0xA5A5A5A5A5A5A5A5ULL));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(seed, a), b);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c) {
    return derive_seed(derive_seed(seed, a, b), c);
}

/// Stream labels used to keep sub-streams of one run independent.
namespace stream {
inline constexpr std::uint64_t kArrivals = 1;
inline constexpr std::uint64_t kDetector = 2;
inline constexpr std::uint64_t kHistory = 3;
inline constexpr std::uint64_t kHistoryDetector = 4;
inline constexpr std::uint64_t kSuite = 5;
inline constexpr std::uint64_t kInit = 6;
inline constexpr std::uint64_t kTrainSeries = 7;
} // namespace stream

/// Sequential deterministic random stream.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw ArgumentError("uniform_int: empty range");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    bool bernoulli(double p) { return next_double() < p; }

    /// Poisson draw via Knuth's product-of-uniforms, chunked for larger means
    /// (a sum of independent Poissons is Poisson).
    std::int64_t poisson(double mean) {
        if (!(mean >= 0.0)) throw ArgumentError("poisson: mean must be >= 0");
        std::int64_t total = 0;
        while (mean > 25.0) {
            total += poisson_knuth(25.0);
            mean -= 25.0;
        }
        total += poisson_knuth(mean);
        return total;
    }

    /// Binomial draw as n independent Bernoulli trials.
    std::int64_t binomial(std::int64_t n, double p) {
        if (n < 0) throw ArgumentError("binomial: n must be >= 0");
        if (p <= 0.0) return 0;
        if (p >= 1.0) return n;
        std::int64_t k = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            if (next_double() < p) ++k;
        }
        return k;
    }

private:
    std::int64_t poisson_knuth(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        std::int64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= next_double();
        } while (p > limit);
        return k - 1;
    }

    std::uint64_t state_;
};

} // namespace astm
