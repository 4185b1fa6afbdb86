#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace hacchow::numkit {

/// SplitMix64 finalizer, used to derive well-mixed substream identifiers.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Combine identifiers into a single stream id (order sensitive).
[[nodiscard]] constexpr std::uint64_t derive_stream(std::uint64_t a, std::uint64_t b) noexcept {
    return mix64(mix64(a) ^ (b + 0x632be59bd9b4e019ULL));
}

/**
 * @brief Reproducible random stream.
 *
 * Generator: std::mt19937_64 seeded through std::seed_seq with the four
 * 32-bit halves of (seed, stream). Both are fully specified by the C++
 * standard, so a (seed, stream) pair yields the same sequence on every
 * conforming host. Uniforms use the top 53 bits; normals use the Marsaglia
 * polar method, caching the second variate of each accepted pair.
 *
 * Single-owner: not safe to share between threads. Parallel users create one
 * stream per work item with a distinct stream id.
 */
class RngStream {
public:
    static constexpr std::string_view kAlgorithm = "mt19937_64+seed_seq/polar";

    RngStream(std::uint64_t seed, std::uint64_t stream);

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

    /// Uniform on the open interval (0, 1).
    double uniform();
    double normal();
    void fill_normals(std::span<double> out);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

[[nodiscard]] std::vector<double> standard_normals(RngStream& rng, std::size_t n);

}  // namespace hacchow::numkit
