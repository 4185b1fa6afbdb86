#pragma once

#include "hacchow/bases.hpp"
#include "hacchow/matrix.hpp"

#include <span>

namespace hacchow::longrun {

using numkit::Matrix;

struct LongRunEstimate {
    Matrix omega_hat;  ///< 2m x 2m series estimate of the score long-run variance
    Matrix sandwich;   ///< R Q^{-1} Omega Q^{-1} R'
    std::size_t K = 0;
    bases::BasisFamily basis_family = bases::BasisFamily::FourierRaw;
};

/// Score matrix with rows X~_{z,t}' u_t.
[[nodiscard]] Matrix score_matrix(const Matrix& xz, std::span<const double> u_hat);

/**
 * Omega-hat = (1/K) sum_j g_j g_j' with g_j = T^{-1/2} sum_t phi_{j,t} X~_{z,t}' u_t.
 * Accumulated as G = Phi' S / sqrt(T), Omega-hat = G'G / K, so no T x T
 * intermediate is formed.
 */
[[nodiscard]] Matrix series_lrv(const bases::BasisSet& basis, const Matrix& xz, std::span<const double> u_hat);

[[nodiscard]] Matrix sandwich_variance(const Matrix& r, const Matrix& q_hat, const Matrix& omega_hat);

[[nodiscard]] LongRunEstimate estimate(const bases::BasisSet& basis, const Matrix& xz,
                                       std::span<const double> u_hat, const Matrix& r, const Matrix& q_hat);

}  // namespace hacchow::longrun
