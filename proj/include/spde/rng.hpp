#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "spde/util.hpp"

namespace spde {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A draw is a
/// pure function of (key, counter), which makes every sample addressable by
/// (seed, path, step, mode, slot) and reproducible under any scheduling.
struct Philox4x32 {
    static constexpr uint32_t kM0 = 0xD2511F53u;
    static constexpr uint32_t kM1 = 0xCD9E8D57u;
    static constexpr uint32_t kW0 = 0x9E3779B9u;
    static constexpr uint32_t kW1 = 0xBB67AE85u;

    static std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr,
                                         std::array<uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const uint64_t p0 = static_cast<uint64_t>(kM0) * ctr[0];
            const uint64_t p1 = static_cast<uint64_t>(kM1) * ctr[2];
            const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
            const uint32_t lo0 = static_cast<uint32_t>(p0);
            const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
            const uint32_t lo1 = static_cast<uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/// Addressable stream of N(0,1) pairs derived from a 64-bit master seed and a
/// 128-bit counter (hi, lo). Distinct counters give independent draws.
class CounterRng {
public:
    explicit CounterRng(uint64_t seed) : seed_(seed) {}

    uint64_t seed() const { return seed_; }

    std::array<uint32_t, 4> raw(uint64_t ctr_hi, uint64_t ctr_lo) const {
        return Philox4x32::block(
            {static_cast<uint32_t>(ctr_lo), static_cast<uint32_t>(ctr_lo >> 32),
             static_cast<uint32_t>(ctr_hi), static_cast<uint32_t>(ctr_hi >> 32)},
            {static_cast<uint32_t>(seed_), static_cast<uint32_t>(seed_ >> 32)});
    }

    /// Two independent standard normals at the given counter (Box-Muller).
    std::pair<double, double> normal_pair(uint64_t ctr_hi, uint64_t ctr_lo) const {
        const auto x = raw(ctr_hi, ctr_lo);
        const uint64_t a = (static_cast<uint64_t>(x[1]) << 32) | x[0];
        const uint64_t b = (static_cast<uint64_t>(x[3]) << 32) | x[2];
        // 53-bit uniforms strictly inside (0,1)
        const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
        const double u2 = (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * kPi * u2;
        return {r * std::cos(th), r * std::sin(th)};
    }

    double uniform(uint64_t ctr_hi, uint64_t ctr_lo) const {
        const auto x = raw(ctr_hi, ctr_lo);
        const uint64_t a = (static_cast<uint64_t>(x[1]) << 32) | x[0];
        return (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    uint64_t seed_;
};

/// 64-bit FNV-1a, used to derive sub-stream keys and config hashes.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t v[2] = {seed, salt};
    return fnv1a(v, sizeof v);
}

} // namespace spde
