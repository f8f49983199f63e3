#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>
#include <string_view>

namespace iiclab {

// SplitMix64 constants (Steele/Lea/Flood). The per-edge uniform stream is the
// plain splitmix64 output sequence for the given seed, indexed by edge id:
//   raw(seed, i) = finalize(seed + (i+1) * GAMMA)
// which equals the (i+1)-th call to a sequential splitmix64 started at seed.
// Counter addressing keeps the stream random-access (SIMD batches, lazy edge
// queries and materialized samples all read identical bits).
inline constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t splitmix64_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t edge_raw(std::uint64_t seed, std::uint64_t edge_id) {
    return splitmix64_finalize(seed + (edge_id + 1) * kSplitMixGamma);
}

inline constexpr double to_unit_interval(std::uint64_t r) {
    return double(r >> 11) * 0x1.0p-53;  // [0,1), 53-bit mantissa
}

inline double edge_uniform(std::uint64_t seed, std::uint64_t edge_id) {
    return to_unit_interval(edge_raw(seed, edge_id));
}

// Integer threshold equivalent of `to_unit_interval(raw) < p`: the open test
// becomes (raw >> 11) < p_threshold(p). Exact because p * 2^53 is a power-of-
// two scaling (no rounding) and the mantissa is an integer in [0, 2^53).
inline std::uint64_t p_threshold(double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return 1ull << 53;
    return std::uint64_t(std::ceil(p * 0x1.0p53));
}

inline bool edge_open(std::uint64_t seed, std::uint64_t edge_id, std::uint64_t threshold) {
    return (edge_raw(seed, edge_id) >> 11) < threshold;
}

namespace detail {
inline constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}
inline constexpr std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 0x100000001b3ull;
    }
    return h;
}
}  // namespace detail

// Keyed-hash seed derivation: absorbing labels one at a time keeps the map
// order-sensitive, so ("a","b") and ("b","a") land in different streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    return splitmix64_finalize(splitmix64_finalize(master + kSplitMixGamma) ^ detail::fnv1a64(label));
}
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64_finalize(splitmix64_finalize(master + kSplitMixGamma) ^
                               detail::fnv1a64_u64(index));
}
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) {
    return derive_seed(derive_seed(master, label), index);
}

// xoshiro256++ (Blackman/Vigna), seeded through splitmix64. Used for the
// sequential draws (walk steps, root choice, bootstrap) where a counter
// stream buys nothing.
class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : s_) {
            s += kSplitMixGamma;
            w = splitmix64_finalize(s);
        }
    }

    std::uint64_t next() {
        auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, bound). Fixed-point multiply: deterministic across
    // platforms, bias O(bound/2^64) which is immaterial at our bounds.
    std::uint64_t bounded(std::uint64_t bound) {
        return std::uint64_t((static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    double uniform01() { return to_unit_interval(next()); }

    // standard normal via Box-Muller (deterministic; used for test observables)
    double normal() {
        double u1 = 0.0;
        do { u1 = uniform01(); } while (u1 == 0.0);
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

  private:
    std::uint64_t s_[4];
};

}  // namespace iiclab
