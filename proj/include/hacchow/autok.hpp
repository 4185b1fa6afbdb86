#pragma once

#include "hacchow/matrix.hpp"

#include <cstddef>
#include <optional>
#include <span>

namespace hacchow::autok {

using numkit::Matrix;

/// Spectral radius above which the fitted VAR(1) coefficient is shrunk.
inline constexpr double kStabilityClamp = 0.97;

struct VarFit {
    Matrix a_hat;
    Matrix sigma_hat;
    double spectral_radius = 0.0;  ///< before any clamping
    bool clamped = false;
};

/// VAR(1) plug-in quantities for the MSE-optimal number of basis functions.
struct PluginModel {
    Matrix a_hat;
    Matrix sigma_hat;
    Matrix gamma0;   ///< solves Gamma0 = A Gamma0 A' + Sigma
    Matrix omega_v;  ///< (I - A)^{-1} Sigma (I - A')^{-1}
    Matrix b_hat;    ///< sum_h h^2 Gamma(h) = S + S', S = A (I + A)(I - A)^{-3} Gamma0
    double spectral_radius = 0.0;
    bool clamped = false;
};

struct KChoice {
    std::size_t K = 0;
    double k_star = 0.0;  ///< unrounded optimum (infinite when the curvature is zero)
    std::size_t k_min = 0;
    std::size_t k_max = 0;
};

/// v_t = R Q^{-1} X~_{z,t}' u_t, one row per t.
[[nodiscard]] Matrix score_series(const Matrix& r, const Matrix& q_hat, const Matrix& xz,
                                  std::span<const double> u_hat);

/**
 * @brief Least-squares VAR(1) without intercept, v_t = A v_{t-1} + e_t.
 *
 * Sigma-hat uses divisor (T - 1 - p). If the fitted spectral radius exceeds
 * kStabilityClamp, A is rescaled to that radius and `clamped` is set.
 *
 * @throws Error(DimensionMismatch) if T < p + 10
 * @throws Error(NotPositiveDefinite) for degenerate (e.g. constant) series
 */
[[nodiscard]] VarFit fit_var1(const Matrix& v);

[[nodiscard]] PluginModel build_plugin(const VarFit& fit);

/// tr((I + K_pp)(Omega kron Omega)) = tr(Omega)^2 + tr(Omega^2) for symmetric Omega.
[[nodiscard]] double variance_constant(const Matrix& omega_v);

/**
 * K* = [9 tr((I + K_pp)(Omega kron Omega)) / (pi^4 vec(B)'vec(B))]^{1/5} T^{4/5},
 * rounded to nearest (ties up) and clamped to [max(p, 2), k_max].
 * `k_max` defaults to T - 2. Zero curvature returns k_max.
 */
[[nodiscard]] KChoice mse_optimal_k(const PluginModel& model, std::size_t T, std::size_t p,
                                    std::optional<std::size_t> k_max = std::nullopt);

struct AutoKResult {
    KChoice choice;
    PluginModel model;
};

/// Full data-driven rule: scores -> VAR(1) -> plug-in -> K.
[[nodiscard]] AutoKResult choose_k(const Matrix& r, const Matrix& q_hat, const Matrix& xz,
                                   std::span<const double> u_hat,
                                   std::optional<std::size_t> k_max = std::nullopt);

}  // namespace hacchow::autok
