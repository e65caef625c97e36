#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace qubrain {

// Deterministic 64-bit-state PRNG (SplitMix64).  Every stochastic component
// draws from its own derived stream so that runs are reproducible bit-for-bit
// across platforms; std::random distributions are avoided on purpose because
// their output is implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), n > 0.  Multiply-shift reduction.
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller (two uniforms per pair, spare cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = r * std::sin(two_pi * u2);
        has_spare_ = true;
        return r * std::cos(two_pi * u2);
    }

    /// Child stream; advances this stream by one draw.
    Rng split() { return Rng(next_u64()); }

    /// Pure function of (root, label): the stream used by one named component.
    static Rng derive(std::uint64_t root, std::string_view label) {
        std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a 64
        for (unsigned char c : label) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        Rng mix(root ^ h);
        mix.next_u64();
        return Rng(mix.next_u64());
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace qubrain
