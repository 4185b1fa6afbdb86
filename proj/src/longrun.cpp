#include "hacchow/longrun.hpp"

#include "hacchow/error.hpp"
#include "hacchow/linalg.hpp"

#include <cmath>

namespace hacchow::longrun {

Matrix score_matrix(const Matrix& xz, std::span<const double> u_hat) {
    if (xz.rows() != u_hat.size()) throw Error(ErrorCode::DimensionMismatch, "score_matrix: length");
    Matrix s(xz.rows(), xz.cols());
    for (std::size_t t = 0; t < xz.rows(); ++t)
        for (std::size_t j = 0; j < xz.cols(); ++j) s(t, j) = xz(t, j) * u_hat[t];
    return s;
}

Matrix series_lrv(const bases::BasisSet& basis, const Matrix& xz, std::span<const double> u_hat) {
    if (basis.T != xz.rows() || basis.matrix.rows() != xz.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "series_lrv: basis length differs from T");
    }
    const Matrix scores = score_matrix(xz, u_hat);
    Matrix g = numkit::crossprod(basis.matrix, scores);
    g *= 1.0 / std::sqrt(static_cast<double>(basis.T));
    Matrix omega = numkit::crossprod(g, g);
    omega *= 1.0 / static_cast<double>(basis.K());
    return numkit::symmetrize(omega);
}

Matrix sandwich_variance(const Matrix& r, const Matrix& q_hat, const Matrix& omega_hat) {
    if (r.cols() != q_hat.rows() || omega_hat.rows() != q_hat.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "sandwich_variance: shapes");
    }
    const Matrix a = numkit::spd_solve(q_hat, r.transpose());  // Q^{-1} R'
    return numkit::symmetrize(numkit::crossprod(a, omega_hat * a));
}

LongRunEstimate estimate(const bases::BasisSet& basis, const Matrix& xz, std::span<const double> u_hat,
                         const Matrix& r, const Matrix& q_hat) {
    LongRunEstimate est;
    est.omega_hat = series_lrv(basis, xz, u_hat);
    est.sandwich = sandwich_variance(r, q_hat, est.omega_hat);
    est.K = basis.K();
    est.basis_family = basis.family;
    return est;
}

}  // namespace hacchow::longrun
