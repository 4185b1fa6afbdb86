#pragma once

#include "hacchow/matrix.hpp"

#include <cstddef>

namespace hacchow::regression {

using numkit::Matrix;
using numkit::Vector;

/// Observed series. `z` may be empty (0 columns) when there are no
/// stable-coefficient covariates.
struct RegressionData {
    Vector y;
    Matrix x;
    Matrix z;
    double lambda = 0.5;

    [[nodiscard]] std::size_t T() const noexcept { return y.size(); }
    [[nodiscard]] std::size_t m() const noexcept { return x.cols(); }
    [[nodiscard]] std::size_t ell() const noexcept { return z.cols(); }
};

/// H0: R_small beta_1 = R_small beta_2, i.e. R beta = 0 with R = [R_small, -R_small].
struct BreakHypothesis {
    Matrix r_small;

    [[nodiscard]] static BreakHypothesis all_coefficients(std::size_t m) {
        return {Matrix::identity(m)};
    }
    [[nodiscard]] std::size_t p() const noexcept { return r_small.rows(); }
    [[nodiscard]] Matrix full_r() const;
};

struct FitResult {
    Vector beta_hat;       ///< beta_1 stacked on beta_2
    Vector residuals;      ///< u-hat = M_Z Y - M_Z X~ beta-hat
    Matrix q_hat;          ///< X~_z' X~_z / T
    Matrix xz;             ///< effective regressors X~ or M_Z X~
    std::size_t break_index = 0;
};

/// Checks shapes, finiteness and regime sizes (floor(lambda T) >= m + 2 on both sides).
/// @throws Error(RegimeTooSmall), Error(DimensionMismatch) or Error(DomainError)
void validate(const RegressionData& data);
/// Checks that R_small is p x m with full row rank p <= m.
void validate(const BreakHypothesis& hyp, std::size_t m);

/// Row t is (X_t, 0) for t <= floor(lambda T) and (0, X_t) afterwards.
[[nodiscard]] Matrix build_break_design(const Matrix& x, double lambda);

/// M_Z A = A - Z (Z'Z)^{-1} Z' A. Returns A unchanged when Z has no columns.
[[nodiscard]] Matrix partial_out(const Matrix& a, const Matrix& z);

[[nodiscard]] FitResult ols_fit(const RegressionData& data, const BreakHypothesis& hyp);

}  // namespace hacchow::regression
