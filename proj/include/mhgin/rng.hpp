#pragma once

// Counter-based deterministic random streams.
//
// Every draw is a pure function of (seed, stream id, counter), so streams
// can be split per vessel/attribute and consumed in any order without
// changing the result. The generator is the SplitMix64 finalizer applied
// to a keyed counter; normals come from the Box-Muller transform of two
// consecutive uniforms.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace mhgin {

inline constexpr std::uint64_t kGolden64 = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += kGolden64;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a over a byte string, for deriving stream ids from names.
inline constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (b + kGolden64 + (a << 6) + (a >> 2)));
}

class RngStream {
public:
    RngStream() : key_(mix64(0)) {}
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_(hash_combine(mix64(seed), mix64(stream_id))) {}

    std::uint64_t next_u64() { return word_at(counter_++); }

    /// Uniform draw in (0, 1]; never returns 0 so log() is always finite.
    double uniform() { return to_unit(next_u64()); }

    /// Uniform over [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * (1.0 - uniform()); }

    /// Standard normal via Box-Muller on two sequential uniforms.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Random access by index, independent of the sequential counter.
    double uniform_at(std::uint64_t index) const { return to_unit(word_at(index)); }

    /// Integer in [0, n). Uses rejection-free modulo; bias is negligible for n << 2^64.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
    std::uint64_t word_at(std::uint64_t counter) const { return mix64(key_ ^ mix64(counter)); }
    static double to_unit(std::uint64_t w) {
        return (static_cast<double>(w >> 11) + 1.0) * 0x1.0p-53;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Canonical stream derivation used by the corruption and training code so
/// that per-(vessel, attribute) randomness is order-independent.
inline std::uint64_t stream_id(std::string_view purpose, std::string_view vessel = {},
                               std::uint64_t index = 0) {
    return hash_combine(fnv1a(purpose), hash_combine(fnv1a(vessel), index));
}

} // namespace mhgin
