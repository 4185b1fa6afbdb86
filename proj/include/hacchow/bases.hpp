#pragma once

#include "hacchow/matrix.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string_view>
#include <tuple>

namespace hacchow::bases {

using numkit::Matrix;
using numkit::Vector;

enum class BasisFamily { FourierRaw, FourierTransformed };

[[nodiscard]] std::string_view family_name(BasisFamily f) noexcept;

/// Last index of the first regime, floor(lambda * T), guarded against the
/// representation error of lambda (0.29 * 100 must give 29, not 28).
[[nodiscard]] std::size_t break_index(std::size_t T, double lambda);

/**
 * @brief T x K matrix of basis vectors; column j holds phi_j(t/T), t = 1..T.
 *
 * For the transformed family `gram_factor` holds the Cholesky factor U_T of
 * the raw Gram matrix, so that matrix = raw * U_T^{-1}.
 */
struct BasisSet {
    std::size_t T = 0;
    double lambda = 0.0;
    BasisFamily family = BasisFamily::FourierRaw;
    Matrix matrix;
    Matrix gram_factor;

    [[nodiscard]] std::size_t K() const noexcept { return matrix.cols(); }
    /// Basis built from the first `k` columns. Exact for both families
    /// because the Gram-Schmidt transform is triangular.
    [[nodiscard]] BasisSet leading(std::size_t k) const;
};

/// The break-induced covariance kernel C_T(lambda), held implicitly.
class KernelMatrix {
public:
    KernelMatrix(std::size_t T, double lambda);

    [[nodiscard]] std::size_t T() const noexcept { return T_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] std::size_t break_index() const noexcept { return k_; }

    /// Entry (i, j) with 1-based indices, as in the two-block formula.
    [[nodiscard]] double entry(std::size_t i, std::size_t j) const noexcept;
    /// C_T * A in O(T * cols) without materializing C_T.
    [[nodiscard]] Matrix apply(const Matrix& a) const;
    [[nodiscard]] Matrix dense() const;

private:
    std::size_t T_;
    double lambda_;
    std::size_t k_;
};

/// Interleaved Fourier basis sqrt(2)cos(2 pi r), sqrt(2)sin(2 pi r), sqrt(2)cos(4 pi r), ...
[[nodiscard]] BasisSet fourier_matrix(std::size_t T, std::size_t K);

[[nodiscard]] KernelMatrix kernel_matrix(std::size_t T, double lambda);

/// a' C_T b / T^2.
[[nodiscard]] double kernel_inner(std::span<const double> a, std::span<const double> b,
                                  const KernelMatrix& c);

/// Regime-demeaned and scaled version of one basis column (finite-sample phi-tilde).
[[nodiscard]] Vector phi_tilde_grid(std::span<const double> phi_col, double lambda, std::size_t T);
/// phi-tilde applied to every column.
[[nodiscard]] Matrix phi_tilde_matrix(const Matrix& phi, double lambda);
/// phi-tilde_0: 1/lambda on the first regime, -1/(1 - lambda) on the second.
[[nodiscard]] Vector phi_tilde_zero(std::size_t T, double lambda);

/// (1/T) sum_t phi-tilde_j(t/T)^2 for each column j.
[[nodiscard]] Vector phi_tilde_column_norms(const BasisSet& basis);
/// (1/(K T)) sum_j sum_t phi-tilde_j(t/T)^2.
[[nodiscard]] double norm_factor(const BasisSet& basis);

/// Phi' C_T Phi / T^2.
[[nodiscard]] Matrix kernel_gram(const Matrix& phi, const KernelMatrix& c);

/**
 * @brief Gram-Schmidt orthonormalization with respect to the kernel inner product.
 *
 * Computes U_T with Phi' C_T Phi / T^2 = U_T' U_T and returns Phi U_T^{-1}.
 * @throws Error(NotPositiveDefinite) if the kernel Gram matrix is singular.
 */
[[nodiscard]] BasisSet gram_transform(const BasisSet& raw, const KernelMatrix& c);

/// Raw Fourier basis, or its kernel-orthonormalized version, in one call.
[[nodiscard]] BasisSet make_basis(BasisFamily family, std::size_t T, std::size_t K, double lambda);

/// Writes phi.csv, ct.csv, ut.csv and phistar.csv into `dir` for external checks.
void dump_debug_csv(const std::filesystem::path& dir, const BasisSet& raw, const KernelMatrix& c,
                    const BasisSet& transformed);

/**
 * @brief Thread-safe cache of the widest basis available for a (family, T, lambda).
 *
 * Bases do not depend on the data, so Monte Carlo replications share them.
 * The transformed family is factored once at K = T - 2 and truncated on
 * request; `max_k` reports how many leading columns have a positive-definite
 * kernel Gram matrix.
 */
class BasisCache {
public:
    [[nodiscard]] BasisSet get(BasisFamily family, std::size_t T, double lambda, std::size_t K);
    [[nodiscard]] std::size_t max_k(BasisFamily family, std::size_t T, double lambda);

private:
    using Key = std::tuple<int, std::size_t, long long>;
    std::shared_ptr<const BasisSet> widest(BasisFamily family, std::size_t T, double lambda);

    std::mutex mutex_;
    std::map<Key, std::shared_ptr<const BasisSet>> entries_;
};

}  // namespace hacchow::bases
