#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011): every
// variate is a pure function of (seed, counter), so results do not depend on
// evaluation order or thread count.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace pbs {

using PhiloxCounter = std::array<std::uint32_t, 4>;

inline PhiloxCounter philox4x32(PhiloxCounter ctr, std::uint64_t seed) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    std::uint32_t k0 = static_cast<std::uint32_t>(seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0, static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1, static_cast<std::uint32_t>(p0)};
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return ctr;
}

// Uniform on the open interval (0, 1) from 64 random bits.
inline double uniform_open(std::uint32_t hi, std::uint32_t lo) {
    // 52 bits so that the midpoint offset cannot round up to 1.
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

// Two independent standard normals (Box-Muller) for one counter value.
inline std::pair<double, double> normal_pair(std::uint64_t seed, const PhiloxCounter& ctr) {
    const auto r = philox4x32(ctr, seed);
    const double u1 = uniform_open(r[0], r[1]);
    const double u2 = uniform_open(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

inline double uniform(std::uint64_t seed, const PhiloxCounter& ctr) {
    const auto r = philox4x32(ctr, seed);
    return uniform_open(r[0], r[1]);
}

}  // namespace pbs
