#pragma once

#include <cstdint>
#include <random>

namespace srn {

// Deterministic random source. The engine (std::mt19937_64) and all value
// mappings below are fully specified, so a given seed yields the identical
// stream on every platform. Distribution helpers avoid <random> distribution
// classes on purpose: those are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Independent stream keyed by (seed, a, b); used for per-epoch and
    // per-iteration streams so training can resume mid-run bit-exactly.
    static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        std::uint64_t x = seed;
        x = splitmix64(x ^ (0x9E3779B97F4A7C15ULL * (a + 1)));
        x = splitmix64(x ^ (0xBF58476D1CE4E5B9ULL * (b + 1)));
        return Rng(x);
    }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0,1) with 53 random mantissa bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). Modulo mapping; the bias of ~n/2^64 is far
    // below anything observable and keeps the mapping trivially portable.
    std::int64_t uniform_int(std::int64_t n) {
        return static_cast<std::int64_t>(eng_() % static_cast<std::uint64_t>(n));
    }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 eng_;
};

} // namespace srn
