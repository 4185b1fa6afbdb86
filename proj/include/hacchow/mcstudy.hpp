#pragma once

#include "hacchow/chowtest.hpp"
#include "hacchow/regression.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hacchow::mcstudy {

/// Regression with X_t = (1, q_t), q_t = rho q_{t-1} + e_q,t and
/// u_t = rho u_{t-1} + e_u,t + psi e_u,t-1; beta_1 = 0 and beta_2 = (delta, delta).
struct DgpSpec {
    std::size_t T = 100;
    double rho = 0.0;
    double psi = 0.0;
    double delta = 0.0;
    double lambda = 0.4;
    std::size_t burn_in = 500;
};

/// @throws Error(DomainError) unless |rho| < 1, T >= 50 and all fields are finite
void validate(const DgpSpec& spec);

/// Stream id shared by every replication of a design; ignores delta so that
/// power curves use common random numbers across break sizes.
[[nodiscard]] std::uint64_t cell_id(const DgpSpec& spec) noexcept;

/// Draws one sample. q and u use separate substreams of (seed, stream).
[[nodiscard]] regression::RegressionData simulate_dgp(const DgpSpec& spec, std::uint64_t seed, std::uint64_t stream);

/// Fixed K, or nullopt for the data-driven choice.
struct KPolicy {
    std::optional<std::size_t> K;
    [[nodiscard]] std::string label() const;
    friend bool operator==(const KPolicy&, const KPolicy&) = default;
};

/// Parses "auto", "8" or "lo:hi:step".
[[nodiscard]] std::vector<KPolicy> parse_k_policies(std::string_view text);

struct StudyOptions {
    std::size_t reps = 2000;
    std::uint64_t seed = 20240101;
    double alpha = 0.05;
    unsigned workers = 1;
    chowtest::TestOptions test;  ///< limit settings for the nonstandard references
};

struct CellResult {
    DgpSpec dgp;
    chowtest::Variant variant = chowtest::Variant::FTransformed;
    KPolicy policy;
    std::size_t reps = 0;
    std::size_t failures = 0;
    std::size_t rejections = 0;
    double rejection = 0.0;  ///< over successful replications
    double mc_se = 0.0;      ///< sqrt(r (1 - r) / successes)
    double ave_k = 0.0;
    std::vector<std::int8_t> decisions;  ///< per replication: 1 reject, 0 accept, -1 failed
};

/**
 * @brief Null rejection frequencies for every (cell, K policy, variant).
 *
 * Replication i of a cell draws its data from stream derive_stream(cell_id, i)
 * under options.seed, so results do not depend on the worker count.
 */
[[nodiscard]] std::vector<CellResult> size_experiment(const std::vector<DgpSpec>& cells,
                                                      const std::vector<chowtest::Variant>& variants,
                                                      const std::vector<KPolicy>& policies,
                                                      const StudyOptions& options, chowtest::TestEngine& engine);

struct PowerPoint {
    chowtest::Variant variant = chowtest::Variant::FTransformed;
    double delta = 0.0;
    double critical_value = 0.0;  ///< empirical null (1 - alpha) quantile of the statistic
    double power = 0.0;
    double mc_se = 0.0;
    double ave_k = 0.0;
    std::size_t reps = 0;
    std::size_t failures = 0;
    std::vector<std::int8_t> decisions;
};

struct PowerResult {
    std::vector<PowerPoint> points;
    /// Every pair of variants sharing a statistic made the same size-adjusted
    /// decision in every replication.
    bool pairs_identical = true;
};

/// Size-adjusted power over `deltas` for the base design (its delta is ignored).
[[nodiscard]] PowerResult power_experiment(const DgpSpec& base, const std::vector<double>& deltas,
                                           const std::vector<chowtest::Variant>& variants, const KPolicy& policy,
                                           const StudyOptions& options, chowtest::TestEngine& engine);

/// The eight (rho, psi) designs of the data-driven K table at sample size T.
[[nodiscard]] std::vector<DgpSpec> table1_cells(std::size_t T);

/// The four F-type variants compared in the study.
[[nodiscard]] std::vector<chowtest::Variant> study_variants();

void write_size_csv(std::ostream& os, const std::vector<CellResult>& results);
void write_power_csv(std::ostream& os, const PowerResult& result, const KPolicy& policy);

}  // namespace hacchow::mcstudy
