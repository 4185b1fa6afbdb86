#include "hacchow/rng.hpp"

#include "hacchow/error.hpp"

#include <cmath>

namespace hacchow::numkit {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

double RngStream::uniform() {
    for (;;) {
        const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

double RngStream::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double x;
    double y;
    double w;
    do {
        x = 2.0 * uniform() - 1.0;
        y = 2.0 * uniform() - 1.0;
        w = x * x + y * y;
    } while (w >= 1.0 || w == 0.0);
    const double f = std::sqrt(-2.0 * std::log(w) / w);
    cached_ = y * f;
    has_cached_ = true;
    return x * f;
}

void RngStream::fill_normals(std::span<double> out) {
    for (double& v : out) v = normal();
}

std::vector<double> standard_normals(RngStream& rng, std::size_t n) {
    if (n == 0) throw Error(ErrorCode::DomainError, "standard_normals requires n >= 1");
    std::vector<double> v(n);
    rng.fill_normals(v);
    return v;
}

}  // namespace hacchow::numkit
