#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace rpcp {

/// SplitMix64 finalizer. Bijective 64-bit mixing.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive a child seed from a parent seed and a path of stream ids.
/// Distinct paths give unrelated keys; the same path always gives the same key.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t key = mix64(parent ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t id : path) {
        key = mix64(key ^ mix64(id + 0x9e3779b97f4a7c15ULL));
    }
    return key;
}

/// Counter-based generator keyed by (seed, stream).
///
/// The i-th output is mix64(key + (i + 1) * golden), so the state is just a
/// counter and any (seed, stream) pair addresses an independent sequence.
/// Satisfies UniformRandomBitGenerator so it plugs into <random> distributions.
class StreamRng {
public:
    using result_type = std::uint64_t;

    explicit StreamRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : state_(derive_seed(seed, {stream})) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform integer in [0, bound) by multiply-shift on the top 32 bits.
    std::uint32_t below(std::uint32_t bound) noexcept {
        return static_cast<std::uint32_t>(((operator()() >> 32) * bound) >> 32);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>(operator()() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

}  // namespace rpcp
