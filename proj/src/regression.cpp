#include "hacchow/regression.hpp"

#include "hacchow/bases.hpp"
#include "hacchow/error.hpp"
#include "hacchow/linalg.hpp"

#include <cmath>
#include <string>

namespace hacchow::regression {

namespace {

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

Matrix BreakHypothesis::full_r() const {
    const std::size_t m = r_small.cols();
    Matrix r(p(), 2 * m);
    for (std::size_t i = 0; i < p(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            r(i, j) = r_small(i, j);
            r(i, m + j) = -r_small(i, j);
        }
    }
    return r;
}

void validate(const RegressionData& data) {
    const std::size_t T = data.T();
    const std::size_t m = data.m();
    if (m == 0) throw Error(ErrorCode::DimensionMismatch, "X needs at least one column");
    if (data.x.rows() != T) throw Error(ErrorCode::DimensionMismatch, "X and Y lengths differ");
    if (data.ell() > 0 && data.z.rows() != T) throw Error(ErrorCode::DimensionMismatch, "Z and Y lengths differ");
    if (!all_finite(data.y) || !all_finite(data.x.data()) || !all_finite(data.z.data())) {
        throw Error(ErrorCode::DomainError, "data contain missing or non-finite values");
    }
    if (!(data.lambda > 0.0 && data.lambda < 1.0)) {
        throw Error(ErrorCode::DomainError, "break fraction must lie in (0,1)");
    }
    if (T <= 2 * m + data.ell() + 2) {
        throw Error(ErrorCode::DimensionMismatch, "need T > 2m + l + 2");
    }
    const std::size_t k = bases::break_index(T, data.lambda);
    if (k < m + 2 || T - k < m + 2) {
        throw Error(ErrorCode::RegimeTooSmall,
                    "regimes have " + std::to_string(k) + " and " + std::to_string(T - k) +
                        " observations; each needs at least m + 2 = " + std::to_string(m + 2));
    }
}

void validate(const BreakHypothesis& hyp, std::size_t m) {
    if (hyp.r_small.cols() != m || hyp.p() == 0 || hyp.p() > m) {
        throw Error(ErrorCode::DimensionMismatch, "restriction matrix must be p x m with 1 <= p <= m");
    }
    try {
        (void)numkit::cholesky(numkit::Matrix(hyp.r_small * hyp.r_small.transpose()));
    } catch (const Error&) {
        throw Error(ErrorCode::DomainError, "restriction matrix must have full row rank");
    }
}

Matrix build_break_design(const Matrix& x, double lambda) {
    const std::size_t T = x.rows();
    const std::size_t m = x.cols();
    const std::size_t k = bases::break_index(T, lambda);
    if (k < 1 || k >= T) throw Error(ErrorCode::RegimeTooSmall, "break leaves an empty regime");
    Matrix xt(T, 2 * m);
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t offset = t < k ? 0 : m;
        for (std::size_t j = 0; j < m; ++j) xt(t, offset + j) = x(t, j);
    }
    return xt;
}

Matrix partial_out(const Matrix& a, const Matrix& z) {
    if (z.cols() == 0) return a;
    if (z.rows() != a.rows()) throw Error(ErrorCode::DimensionMismatch, "partial_out: row count");
    const Matrix coef = numkit::spd_solve(numkit::crossprod(z, z), numkit::crossprod(z, a));
    return a - z * coef;
}

FitResult ols_fit(const RegressionData& data, const BreakHypothesis& hyp) {
    validate(data);
    validate(hyp, data.m());
    const std::size_t T = data.T();

    FitResult fit;
    fit.break_index = bases::break_index(T, data.lambda);
    fit.xz = partial_out(build_break_design(data.x, data.lambda), data.z);
    const Matrix yz = partial_out(Matrix::column(data.y), data.z);

    const Matrix gram = numkit::crossprod(fit.xz, fit.xz);
    const Matrix beta = numkit::spd_solve(gram, numkit::crossprod(fit.xz, yz));
    fit.beta_hat = beta.col(0);

    const numkit::Vector fitted = fit.xz * std::span<const double>(fit.beta_hat);
    fit.residuals.resize(T);
    for (std::size_t t = 0; t < T; ++t) fit.residuals[t] = yz(t, 0) - fitted[t];

    fit.q_hat = gram * (1.0 / static_cast<double>(T));
    return fit;
}

}  // namespace hacchow::regression
