#pragma once

#include "hacchow/bases.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string_view>
#include <tuple>
#include <vector>

namespace hacchow::fixedlimit {

enum class LimitKind {
    FInf,        ///< F_inf: eta0' W^{-1} eta0 / (lambda (1 - lambda))
    FStarInf,    ///< F_inf scaled by lambda (1 - lambda) and the average phi-tilde norm
    TStarInf,    ///< signed t analogue of FStarInf (p = 1)
    ScaledFInf,  ///< F_inf scaled by lambda (1 - lambda) (K - p + 1) / (K p)
};

[[nodiscard]] std::string_view kind_name(LimitKind kind) noexcept;
[[nodiscard]] std::optional<LimitKind> parse_kind(std::string_view name) noexcept;

struct LimitSpec {
    std::size_t p = 1;
    std::size_t K = 2;
    double lambda = 0.4;
    bases::BasisFamily family = bases::BasisFamily::FourierRaw;
    std::size_t grid = 1000;      ///< points used to discretize the Brownian motion
    std::size_t reps = 10000;
    std::uint64_t seed = 20240101;
};

/// Validates grid >= 100, reps >= 1000, 1 <= p, K <= grid - 2 and the break position.
void validate(const LimitSpec& spec);

struct SimulatedDistribution {
    LimitSpec spec;
    LimitKind kind = LimitKind::FInf;
    std::vector<double> draws;  ///< sorted ascending
    std::size_t redraws = 0;    ///< replications re-drawn because W was singular
};

/**
 * @brief Simulate a fixed-K limiting distribution from discretized Brownian functionals.
 *
 * Replication r uses normals from RngStream(spec.seed, derive_stream(r, attempt));
 * eta_0 and eta_j are weighted partial sums of those normals with the
 * phi-tilde functions evaluated on an n-point grid through the finite-sample
 * formula with T = n. Results do not depend on `workers`.
 *
 * @throws Error(SimulationFailure) if more than 0.1% of replications need a redraw
 */
[[nodiscard]] SimulatedDistribution simulate_limit(const LimitSpec& spec, LimitKind kind, unsigned workers = 1);

/**
 * Same as simulate_limit for every K in [k_lo, k_hi] from one pass over the
 * replications (spec.K is ignored). Element i equals
 * simulate_limit(spec with K = k_lo + i, kind) exactly.
 */
[[nodiscard]] std::vector<SimulatedDistribution> simulate_limit_range(const LimitSpec& spec, LimitKind kind,
                                                                      std::size_t k_lo, std::size_t k_hi,
                                                                      unsigned workers = 1);

/// Empirical (1 - alpha) quantile, order statistic x_(ceil(n (1 - alpha))).
[[nodiscard]] double critical_value(const SimulatedDistribution& dist, double alpha);
/// (#{draws >= x} + 1) / (reps + 1).
[[nodiscard]] double empirical_p(const SimulatedDistribution& dist, double x);
/// Two-sided versions for signed (t-type) draws, based on |draw|.
[[nodiscard]] double critical_value_two_sided(const SimulatedDistribution& dist, double alpha);
[[nodiscard]] double empirical_p_two_sided(const SimulatedDistribution& dist, double x);

/// Binary cache format: "HCCV", then little-endian u32 version, u32 kind, u32 p,
/// u32 K, f64 lambda, u32 family, u32 grid, u64 reps, u64 seed, u64 redraws,
/// u64 count and `count` f64 sorted draws.
inline constexpr std::uint32_t kCacheVersion = 1;
void write_distribution(const std::filesystem::path& path, const SimulatedDistribution& dist);
[[nodiscard]] SimulatedDistribution read_distribution(const std::filesystem::path& path);
void export_csv(const std::filesystem::path& path, const SimulatedDistribution& dist);

/**
 * @brief Critical-value cache keyed by (kind, p, K, lambda to 1e-6, family, grid, reps, seed).
 *
 * Lookups are served from memory, then from `directory` when one is set;
 * misses are simulated and persisted (write to a temporary file, then rename).
 */
class CvCache {
public:
    explicit CvCache(std::optional<std::filesystem::path> directory = std::nullopt, unsigned workers = 1);

    [[nodiscard]] std::shared_ptr<const SimulatedDistribution> get(const LimitSpec& spec, LimitKind kind);
    /// Simulate all K in [k_lo, k_hi] that are not cached yet, in one pass.
    void prewarm(const LimitSpec& spec, LimitKind kind, std::size_t k_lo, std::size_t k_hi);
    [[nodiscard]] std::filesystem::path file_for(const LimitSpec& spec, LimitKind kind) const;
    [[nodiscard]] const std::optional<std::filesystem::path>& directory() const noexcept { return directory_; }

private:
    using Key = std::tuple<int, std::size_t, std::size_t, long long, int, std::size_t, std::size_t, std::uint64_t>;
    [[nodiscard]] static Key key_of(const LimitSpec& spec, LimitKind kind);
    std::shared_ptr<const SimulatedDistribution> lookup(const Key& key, const LimitSpec& spec, LimitKind kind);
    void store(const Key& key, SimulatedDistribution dist);

    std::optional<std::filesystem::path> directory_;
    unsigned workers_;
    std::mutex mutex_;
    std::map<Key, std::shared_ptr<const SimulatedDistribution>> entries_;
};

}  // namespace hacchow::fixedlimit
