/// @file rng.hpp
/// @brief Seeded random streams. All randomness in a run flows from one
/// 64-bit master seed through named sub-streams, so adding a consumer never
/// perturbs existing streams.

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace piano {

/// splitmix64-based generator. Self-contained so that sequences are
/// identical across platforms and standard libraries.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    /// Derive a sub-stream from a master seed and a stream name.
    static RngStream named(std::uint64_t master, std::string_view name) {
        std::uint64_t h = 1469598103934665603ull; // FNV-1a offset basis
        for (char ch : name) {
            h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(ch));
            h *= 1099511628211ull;
        }
        return RngStream(mix(master ^ h));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    /// Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    /// Standard normal via Box-Muller (no libc distribution dependence).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace piano
