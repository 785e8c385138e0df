#pragma once

// Deterministic, platform-independent random numbers. All randomness in the
// library flows through SplitMix64 (Steele/Lea/Flood mixing constants) so a
// seed reproduces the same stream on every platform; std::uniform_real_
// distribution is avoided because its output is implementation-defined.

#include <cstdint>

namespace gorelm {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1) with 53 random mantissa bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform on [-1, 1).
    double uniform_pm1() { return 2.0 * uniform01() - 1.0; }

    bool coin() { return (next() & 1ull) != 0; }

private:
    std::uint64_t state_;
};

// Derives a child seed from (seed, tag). One SplitMix64 step of the xored
// pair keeps derived streams decorrelated and is itself documented/portable.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    return SplitMix64(seed ^ (tag * 0x9E3779B97F4A7C15ull)).next();
}

}  // namespace gorelm
