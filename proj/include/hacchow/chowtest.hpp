#pragma once

#include "hacchow/autok.hpp"
#include "hacchow/bases.hpp"
#include "hacchow/distributions.hpp"
#include "hacchow/fixedlimit.hpp"
#include "hacchow/regression.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace hacchow::chowtest {

using numkit::Matrix;
using numkit::Vector;

/// Named tests. The first four pair a statistic with a reference distribution;
/// the t variants are their p = 1 two-sided analogues.
enum class Variant {
    ChisqFourier,         ///< F* (raw Fourier) vs chi-square(p)
    NonstandardFourier,   ///< F* (raw Fourier) vs simulated fixed-K limit
    ChisqTransformed,     ///< scaled F (transformed) vs rescaled chi-square(p)
    FTransformed,         ///< scaled F (transformed) vs F(p, K - p + 1)
    NormalFourier,        ///< t* (raw Fourier) vs N(0, 1)
    NonstandardTFourier,  ///< t* (raw Fourier) vs simulated fixed-K limit
    NormalTransformed,    ///< scaled t (transformed) vs N(0, 1)
    TTransformed,         ///< scaled t (transformed) vs t(K)
};

enum class Reference { ChiSquare, Normal, FisherF, StudentT, Nonstandard };

struct VariantInfo {
    std::string_view name;
    bases::BasisFamily family;
    bool t_type;
    Reference reference;
};

[[nodiscard]] const VariantInfo& info(Variant v) noexcept;
[[nodiscard]] std::string_view variant_name(Variant v) noexcept;
[[nodiscard]] std::optional<Variant> parse_variant(std::string_view name) noexcept;
[[nodiscard]] std::string_view reference_name(Reference r) noexcept;
[[nodiscard]] std::span<const Variant> all_variants() noexcept;

/// F_T = T (R b)' V^{-1} (R b).
/// @throws Error(NotPositiveDefinite) if V is singular
[[nodiscard]] double wald_stat(std::span<const double> beta_hat, const Matrix& r, const Matrix& v, std::size_t T);
/// t_T = sqrt(T) R b / sqrt(V) for a single restriction.
[[nodiscard]] double t_stat(std::span<const double> beta_hat, const Matrix& r, const Matrix& v, std::size_t T);

/// lambda (1 - lambda) nf F_T.
[[nodiscard]] double modified_f(double f, double norm_factor, double lambda);
/// sqrt(lambda (1 - lambda) nf) t_T.
[[nodiscard]] double modified_t(double t, double norm_factor, double lambda);
/// ((K - p + 1) / (K p)) lambda (1 - lambda) F_T. @throws Error(KTooSmall) if K < p
[[nodiscard]] double scaled_f(double f, std::size_t p, std::size_t K, double lambda);
/// sqrt(lambda (1 - lambda)) t_T.
[[nodiscard]] double scaled_t(double t, double lambda);

struct TestOptions {
    Variant variant = Variant::FTransformed;
    std::optional<std::size_t> K;  ///< nullopt selects K from the data
    double alpha = 0.05;
    std::size_t limit_grid = 1000;  ///< settings of the simulated nonstandard references
    std::size_t limit_reps = 10000;
    std::uint64_t limit_seed = 20240101;
};

struct TestReport {
    Variant variant = Variant::FTransformed;
    Reference reference = Reference::FisherF;
    std::string reference_detail;  ///< e.g. "fisher-F(2,7)"
    std::size_t T = 0;
    std::size_t p = 0;
    std::size_t K = 0;
    double lambda = 0.0;
    double statistic_raw = 0.0;       ///< F_T, or t_T for t variants
    double statistic_modified = 0.0;  ///< F*_T or t*_T
    double statistic_scaled = 0.0;    ///< scaled F_T or t_T
    double test_statistic = 0.0;      ///< the one compared with the reference
    double norm_factor = 0.0;
    double alpha = 0.05;
    double p_value = 1.0;
    double critical_value = 0.0;
    bool reject = false;
    /// Second formulation for chisq-transformed: lambda (1 - lambda) F_T vs chi-square(p).
    std::optional<double> alternate_p_value;
    std::optional<autok::AutoKResult> autok;
    Vector beta_hat;
    Matrix omega_hat;
    Matrix sandwich;
};

/// Estimation output reused across variants and values of K.
struct Prepared {
    regression::FitResult fit;
    Matrix r;
    std::size_t T = 0;
    std::size_t p = 0;
    double lambda = 0.0;
};

/**
 * @brief Runs the tests with shared basis and critical-value caches.
 *
 * Safe to use from several threads: both caches are internally locked and
 * everything else is computed per call.
 */
class TestEngine {
public:
    explicit TestEngine(std::shared_ptr<fixedlimit::CvCache> cv_cache = nullptr);

    [[nodiscard]] Prepared prepare(const regression::RegressionData& data,
                                   const regression::BreakHypothesis& hyp) const;
    /// Largest usable K: T - 2, capped by the transformed basis' positive-definite range.
    [[nodiscard]] std::size_t k_upper(std::size_t T, double lambda);
    [[nodiscard]] autok::AutoKResult auto_k(const Prepared& prep);

    /**
     * Statistics for `variant` at K. With `statistic_only` the p-value,
     * critical value and decision are left unset; attach_reference fills them.
     */
    [[nodiscard]] TestReport evaluate(const Prepared& prep, Variant variant, std::size_t K,
                                      const TestOptions& options, bool statistic_only = false);
    void attach_reference(TestReport& report, const TestOptions& options);

    [[nodiscard]] TestReport run(const regression::RegressionData& data, const regression::BreakHypothesis& hyp,
                                 const TestOptions& options);

    /// Fixed-K limit used by the nonstandard variants for (p, K, lambda).
    [[nodiscard]] static fixedlimit::LimitSpec limit_spec(std::size_t p, std::size_t K, double lambda,
                                                          const TestOptions& options);
    [[nodiscard]] static fixedlimit::LimitKind limit_kind(Variant variant);

    [[nodiscard]] bases::BasisCache& basis_cache() noexcept { return bases_; }
    [[nodiscard]] fixedlimit::CvCache& cv_cache() noexcept { return *cv_; }

private:
    bases::BasisCache bases_;
    std::shared_ptr<fixedlimit::CvCache> cv_;
};

/// One-shot convenience wrapper around TestEngine::run.
[[nodiscard]] TestReport run_test(const regression::RegressionData& data, const regression::BreakHypothesis& hyp,
                                  const TestOptions& options = {});

}  // namespace hacchow::chowtest
