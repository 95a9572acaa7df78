#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fsbs {

// splitmix64: used for seed mixing / stream derivation only.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic RNG wrapper. The engine (mt19937_64) is pinned by the C++
// standard; distributions are implemented here because the standard library
// ones are implementation-defined and would break byte-reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

    // Seed value of the independent stream for replication `idx` of a master
    // seed; exposed so harnesses can record per-replication seeds in reports.
    static std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t idx) {
        std::uint64_t s = seed;
        std::uint64_t a = splitmix64_next(s);
        s = seed ^ (0xD2B74407B1CE6E93ULL * (idx + 1));
        std::uint64_t b = splitmix64_next(s);
        return a ^ b;
    }

    // Independent stream for replication `idx` of a master seed.
    static Rng stream(std::uint64_t seed, std::uint64_t idx) {
        return Rng(stream_seed(seed, idx));
    }

    std::uint64_t next_u64() { return gen_(); }

    // uniform on [0, 1), 53-bit resolution
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // standard normal via Box-Muller (cached pair)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // multiply-shift; bias is < 2^-53 per draw, irrelevant at this scale
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace fsbs
