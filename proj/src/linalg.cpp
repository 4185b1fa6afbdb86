#include "hacchow/linalg.hpp"

#include "hacchow/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hacchow::numkit {

namespace {

void require_square(const Matrix& a, const char* what) {
    if (!a.square() || a.empty()) {
        throw Error(ErrorCode::DimensionMismatch, std::string(what) + " requires a square matrix");
    }
}

double max_norm_inf(const Matrix& a) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (double x : a.row(i)) s += std::abs(x);
        best = std::max(best, s);
    }
    return best;
}

// Returns the number of pivots accepted; u is filled for those rows.
std::size_t factor_upper(const Matrix& s_in, Matrix& u, bool throw_on_failure) {
    const double scale = s_in.max_abs();
    if (max_abs_diff(s_in, s_in.transpose()) > 1e-10 * std::max(scale, 1e-300)) {
        throw Error(ErrorCode::DomainError, "cholesky input is not symmetric");
    }
    const Matrix s = symmetrize(s_in);
    const std::size_t n = s.rows();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, s(i, i));
    const double threshold = kSpdTolerance * max_diag;

    u = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double pivot = s(i, i);
        for (std::size_t k = 0; k < i; ++k) pivot -= u(k, i) * u(k, i);
        if (!(pivot > threshold)) {
            if (throw_on_failure) {
                throw Error(ErrorCode::NotPositiveDefinite,
                            "pivot " + std::to_string(i) + " is " + std::to_string(pivot));
            }
            return i;
        }
        const double d = std::sqrt(pivot);
        u(i, i) = d;
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = s(i, j);
            for (std::size_t k = 0; k < i; ++k) v -= u(k, i) * u(k, j);
            u(i, j) = v / d;
        }
    }
    return n;
}

}  // namespace

Matrix cholesky(const Matrix& s) {
    require_square(s, "cholesky");
    Matrix u;
    factor_upper(s, u, true);
    return u;
}

Matrix cholesky_leading(const Matrix& s) {
    require_square(s, "cholesky_leading");
    Matrix u;
    const std::size_t r = factor_upper(s, u, false);
    return u.block(0, 0, r, r);
}

Matrix solve_upper(const Matrix& u, const Matrix& b) {
    require_square(u, "solve_upper");
    if (b.rows() != u.rows()) throw Error(ErrorCode::DimensionMismatch, "solve_upper rhs");
    const std::size_t n = u.rows();
    Matrix x = b;
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t ii = n; ii-- > 0;) {
            double v = x(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k) v -= u(ii, k) * x(k, c);
            x(ii, c) = v / u(ii, ii);
        }
    }
    return x;
}

Matrix solve_upper_transposed(const Matrix& u, const Matrix& b) {
    require_square(u, "solve_upper_transposed");
    if (b.rows() != u.rows()) throw Error(ErrorCode::DimensionMismatch, "solve_upper_transposed rhs");
    const std::size_t n = u.rows();
    Matrix x = b;
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double v = x(i, c);
            for (std::size_t k = 0; k < i; ++k) v -= u(k, i) * x(k, c);
            x(i, c) = v / u(i, i);
        }
    }
    return x;
}

Matrix right_solve_upper(const Matrix& b, const Matrix& u) {
    require_square(u, "right_solve_upper");
    if (b.cols() != u.rows()) throw Error(ErrorCode::DimensionMismatch, "right_solve_upper rhs");
    const std::size_t n = u.rows();
    Matrix x(b.rows(), n);
    for (std::size_t r = 0; r < b.rows(); ++r) {
        auto br = b.row(r);
        auto xr = x.row(r);
        for (std::size_t j = 0; j < n; ++j) {
            double v = br[j];
            for (std::size_t i = 0; i < j; ++i) v -= xr[i] * u(i, j);
            xr[j] = v / u(j, j);
        }
    }
    return x;
}

Matrix spd_solve(const Matrix& s, const Matrix& b) {
    const Matrix u = cholesky(s);
    return solve_upper(u, solve_upper_transposed(u, b));
}

Matrix spd_inverse(const Matrix& s) { return spd_solve(s, Matrix::identity(s.rows())); }

Matrix lu_solve(const Matrix& a_in, const Matrix& b) {
    require_square(a_in, "lu_solve");
    if (b.rows() != a_in.rows()) throw Error(ErrorCode::DimensionMismatch, "lu_solve rhs");
    const std::size_t n = a_in.rows();
    Matrix a = a_in;
    Matrix x = b;
    const double scale = std::max(a.max_abs(), 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (std::abs(a(piv, k)) <= 1e-14 * scale) {
            throw Error(ErrorCode::DomainError, "lu_solve: matrix is singular");
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
            for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
        }
    }
    return solve_upper(a, x);
}

Matrix inverse(const Matrix& a) { return lu_solve(a, Matrix::identity(a.rows())); }

double spectral_radius(const Matrix& a) {
    require_square(a, "spectral_radius");
    double norm = max_norm_inf(a);
    if (norm == 0.0) return 0.0;
    // A^(2^k) = c_k M_k with ||M_k|| = 1; track ell_k = log(c_k) / 2^k.
    Matrix m = a * (1.0 / norm);
    double ell = std::log(norm);
    double weight = 0.5;
    for (int k = 0; k < 60; ++k) {
        m = m * m;
        const double s = max_norm_inf(m);
        if (s == 0.0) return 0.0;
        m *= 1.0 / s;
        ell += weight * std::log(s);
        weight *= 0.5;
    }
    return std::exp(ell);
}

Matrix lyapunov_solve(const Matrix& a, const Matrix& sigma) {
    require_square(a, "lyapunov_solve");
    if (sigma.rows() != a.rows() || !sigma.square()) {
        throw Error(ErrorCode::DimensionMismatch, "lyapunov_solve: Sigma shape");
    }
    const double rho = spectral_radius(a);
    if (rho >= 1.0 - 1e-6) {
        throw Error(ErrorCode::Unstable, "spectral radius " + std::to_string(rho) + " >= 1 - 1e-6");
    }
    Matrix g = symmetrize(sigma);
    Matrix ak = a;
    for (int iter = 0; iter < 200; ++iter) {
        const Matrix inc = ak * g * ak.transpose();
        g += inc;
        if (inc.max_abs() <= 1e-17 * std::max(g.max_abs(), 1e-300)) break;
        ak = ak * ak;
    }
    return symmetrize(g);
}

}  // namespace hacchow::numkit
