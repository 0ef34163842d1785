#pragma once

#include <cmath>
#include <cstdint>

namespace crdlab {

// Counter-based generator streams: draw k of stream (seed, id) is a pure
// function of (seed, id, k), so encoder and decoder reproduce the same dither
// without transmitting it, and independent substreams never collide.

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t draw(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter) {
    return splitmix64(splitmix64(seed ^ splitmix64(stream_id)) + counter * 0x9E3779B97F4A7C15ull);
}

/// Uniform on (0, 1]: never exactly zero, safe under log.
inline double uniform01(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter) {
    return (static_cast<double>(draw(seed, stream_id, counter) >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace rng

constexpr std::uint64_t kDitherStreamId = 0xD17ED17ED17ED17Eull;
constexpr std::uint64_t kSourceStreamId = 0x50FACE50FACE50FAull;

/// Subtractive-dither stream: z(k) ~ Uniform(-delta/2, delta/2], one value per
/// sample index.
inline double dither_sample(std::uint64_t seed, double delta, std::uint64_t k) {
    return delta * (rng::uniform01(seed, kDitherStreamId, k) - 0.5);
}

/// Standard normal via Box-Muller on two counter draws.
inline double gaussian_sample(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t k) {
    const double u1 = rng::uniform01(seed, stream_id, 2 * k);
    const double u2 = rng::uniform01(seed, stream_id, 2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace crdlab
