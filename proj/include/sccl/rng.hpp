#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "sccl/error.hpp"
#include "sccl/matrix.hpp"

namespace sccl {

/// Deterministic random stream.
///
/// Generator: PCG32 (pcg_xsh_rr_64_32, O'Neill 2014) with the reference
/// seeding sequence and a fixed stream constant, so equal seeds give
/// byte-identical output sequences on every platform. Doubles take 53
/// mantissa bits from two consecutive 32-bit outputs; normals come from
/// the Box-Muller transform (pairs cached).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(0), seed_(seed) {
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint64_t seed() const { return seed_; }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + kIncrement;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n) {
        require(n > 0, "uniform_below: n must be positive");
        // rejection to kill modulo bias
        std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller; second member of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform(); // (0, 1], keeps log finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double stddev) { return normal() * stddev; }

    /// Child stream for a worker/repetition index. Keys are mixed through
    /// splitmix64 so derived streams are statistically independent of the
    /// parent and of each other.
    RngStream derived(std::uint64_t key) const {
        return RngStream(splitmix64(seed_ ^ splitmix64(key + 0x9E3779B97F4A7C15ULL)));
    }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

private:
    static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;
    std::uint64_t state_;
    std::uint64_t seed_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Matrix with i.i.d. N(0, stddev^2) entries, row-major fill order.
inline Matrix gaussian_fill(RngStream& rng, std::size_t rows, std::size_t cols, double stddev) {
    require(stddev > 0.0, "gaussian_fill: stddev must be positive");
    Matrix m(rows, cols);
    for (double& x : m.values()) x = rng.normal(stddev);
    return m;
}

} // namespace sccl
