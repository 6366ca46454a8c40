#pragma once

#include <cstdint>
#include <limits>

namespace bns {

/// What a random stream is used for; part of the stream key.
enum class StreamPurpose : std::uint64_t {
    Jumps = 1,
    Brownian = 2,
    Quadrature = 3,
};

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based generator: output i of stream (seed, path, purpose) is a
/// bijective mix of key + i * golden-gamma, so any path's stream can be
/// produced independently of every other path (SplitMix64 output function).
///
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t path, StreamPurpose purpose) noexcept
        : key_(detail::mix64(detail::mix64(seed ^ 0x6a09e667f3bcc909ULL) + path * 0x9e3779b97f4a7c15ULL +
                             static_cast<std::uint64_t>(purpose) * 0xd1b54a32d192ed03ULL)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return detail::mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept { return ((*this)() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace bns
