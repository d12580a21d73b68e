#pragma once

#include <cmath>
#include <cstdint>

namespace audit {

// All randomness in the toolkit flows through this generator so that results
// are reproducible bit-for-bit across runs, platforms, and thread schedules.
// Standard-library distributions are avoided on purpose: their output is not
// specified and differs between implementations.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna), seeded through splitmix64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, bound).
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    std::size_t next_index(std::size_t n) { return static_cast<std::size_t>(next_below(n)); }

    // Standard normal draw via Marsaglia's polar method. Consumes a variable
    // number of uniforms; determinism follows from the stream itself.
    double next_gaussian() {
        for (;;) {
            double u = 2.0 * next_double() - 1.0;
            double v = 2.0 * next_double() - 1.0;
            double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                return u * std::sqrt(-2.0 * std::log(s) / s);
            }
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

// Counter-based stream derivation: (audit seed, index) fully determines the
// per-query stream, so concurrent schedules cannot change any outcome.
inline std::uint64_t derive_seed(std::uint64_t audit_seed, std::uint64_t index) {
    std::uint64_t s = audit_seed ^ (0x632BE59BD9B4E019ULL + index * 0x9E3779B97F4A7C15ULL);
    return splitmix64(s);
}

inline Rng derive_rng(std::uint64_t audit_seed, std::uint64_t index) {
    return Rng(derive_seed(audit_seed, index));
}

}  // namespace audit
