#pragma once

#include "hacchow/matrix.hpp"

namespace hacchow::numkit {

/// Pivot threshold, relative to the largest diagonal entry, below which a
/// symmetric matrix is declared not positive definite.
inline constexpr double kSpdTolerance = 1e-12;

/**
 * @brief Upper-triangular Cholesky factor U with S = U'U.
 *
 * The input is symmetrized as (S + S')/2 first. U has a positive diagonal.
 * Entry U(i,j) only depends on the leading j x j block of S, so the factor
 * of a leading block equals the leading block of the factor.
 *
 * @throws Error(NotPositiveDefinite) if a pivot is <= kSpdTolerance * max diag(S)
 * @throws Error(DomainError) if S is not symmetric to 1e-10 relative
 */
[[nodiscard]] Matrix cholesky(const Matrix& s);

/// Factor of the longest leading block of S that passes the pivot test
/// (same arithmetic and threshold as cholesky). May be 0 x 0.
[[nodiscard]] Matrix cholesky_leading(const Matrix& s);

/// Solve U x = b for upper-triangular U (back substitution), column by column.
[[nodiscard]] Matrix solve_upper(const Matrix& u, const Matrix& b);
/// Solve U' x = b for upper-triangular U (forward substitution).
[[nodiscard]] Matrix solve_upper_transposed(const Matrix& u, const Matrix& b);
/// Right solve X = B U^{-1}, i.e. X U = B. Column j of X uses columns 1..j of B only.
[[nodiscard]] Matrix right_solve_upper(const Matrix& b, const Matrix& u);

/// X with S X = B through cholesky and two triangular solves.
[[nodiscard]] Matrix spd_solve(const Matrix& s, const Matrix& b);
[[nodiscard]] Matrix spd_inverse(const Matrix& s);

/// General square solve by LU with partial pivoting.
[[nodiscard]] Matrix lu_solve(const Matrix& a, const Matrix& b);
[[nodiscard]] Matrix inverse(const Matrix& a);

/// Spectral radius from Gelfand's formula via repeated normalized squaring.
[[nodiscard]] double spectral_radius(const Matrix& a);

/**
 * @brief Solve the discrete Lyapunov equation G = A G A' + Sigma.
 *
 * Uses the doubling recursion G <- G + A G A', A <- A^2, which sums
 * the series sum_h A^h Sigma (A')^h with quadratic convergence.
 *
 * @throws Error(Unstable) if spectral_radius(A) >= 1 - 1e-6
 */
[[nodiscard]] Matrix lyapunov_solve(const Matrix& a, const Matrix& sigma);

}  // namespace hacchow::numkit
