#include "hacchow/bases.hpp"

#include "hacchow/error.hpp"
#include "hacchow/linalg.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>

namespace hacchow::bases {

namespace {

void validate_lambda(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw Error(ErrorCode::DomainError, "break fraction must lie in (0,1)");
    }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    char buf[32];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out << (j ? "," : "") << buf;
        }
        out << '\n';
    }
}

}  // namespace

std::string_view family_name(BasisFamily f) noexcept {
    return f == BasisFamily::FourierRaw ? "fourier-raw" : "fourier-transformed";
}

std::size_t break_index(std::size_t T, double lambda) {
    validate_lambda(lambda);
    return static_cast<std::size_t>(std::floor(lambda * static_cast<double>(T) + 1e-9));
}

BasisSet BasisSet::leading(std::size_t k) const {
    if (k == 0 || k > K()) throw Error(ErrorCode::DimensionMismatch, "leading: K out of range");
    BasisSet out{T, lambda, family, matrix.leading_cols(k), Matrix{}};
    if (!gram_factor.empty()) out.gram_factor = gram_factor.block(0, 0, k, k);
    return out;
}

KernelMatrix::KernelMatrix(std::size_t T, double lambda)
    : T_(T), lambda_(lambda), k_(bases::break_index(T, lambda)) {
    if (k_ < 2 || k_ + 2 > T_) {
        throw Error(ErrorCode::BreakTooExtreme,
                    "each regime needs at least 2 points (floor(lambda T) = " + std::to_string(k_) +
                        ", T = " + std::to_string(T_) + ")");
    }
}

double KernelMatrix::entry(std::size_t i, std::size_t j) const noexcept {
    const double t = static_cast<double>(T_);
    const double diag = (i == j) ? t : 0.0;
    if (i <= k_ && j <= k_) return (diag - 1.0 / lambda_) / (lambda_ * lambda_);
    if (i > k_ && j > k_) {
        const double mu = 1.0 - lambda_;
        return (diag - 1.0 / mu) / (mu * mu);
    }
    return 0.0;
}

Matrix KernelMatrix::apply(const Matrix& a) const {
    if (a.rows() != T_) throw Error(ErrorCode::DimensionMismatch, "kernel apply: row count");
    const double t = static_cast<double>(T_);
    const double mu = 1.0 - lambda_;
    Matrix out(a.rows(), a.cols());
    for (std::size_t c = 0; c < a.cols(); ++c) {
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::size_t i = 0; i < k_; ++i) s1 += a(i, c);
        for (std::size_t i = k_; i < T_; ++i) s2 += a(i, c);
        for (std::size_t i = 0; i < k_; ++i)
            out(i, c) = (t * a(i, c) - s1 / lambda_) / (lambda_ * lambda_);
        for (std::size_t i = k_; i < T_; ++i) out(i, c) = (t * a(i, c) - s2 / mu) / (mu * mu);
    }
    return out;
}

Matrix KernelMatrix::dense() const {
    Matrix c(T_, T_);
    for (std::size_t i = 0; i < T_; ++i)
        for (std::size_t j = 0; j < T_; ++j) c(i, j) = entry(i + 1, j + 1);
    return c;
}

BasisSet fourier_matrix(std::size_t T, std::size_t K) {
    if (T < 4) throw Error(ErrorCode::DimensionMismatch, "fourier_matrix requires T >= 4");
    if (K < 1 || K + 2 > T) throw Error(ErrorCode::DimensionMismatch, "fourier_matrix requires 1 <= K <= T-2");
    BasisSet b;
    b.T = T;
    b.family = BasisFamily::FourierRaw;
    b.matrix = Matrix(T, K);
    for (std::size_t t = 1; t <= T; ++t) {
        const double r = static_cast<double>(t) / static_cast<double>(T);
        for (std::size_t j = 0; j < K; ++j) {
            const double freq = 2.0 * std::numbers::pi * static_cast<double>(j / 2 + 1) * r;
            b.matrix(t - 1, j) = std::numbers::sqrt2 * (j % 2 == 0 ? std::cos(freq) : std::sin(freq));
        }
    }
    return b;
}

KernelMatrix kernel_matrix(std::size_t T, double lambda) { return KernelMatrix(T, lambda); }

double kernel_inner(std::span<const double> a, std::span<const double> b, const KernelMatrix& c) {
    if (a.size() != c.T() || b.size() != c.T()) {
        throw Error(ErrorCode::DimensionMismatch, "kernel_inner: vector length");
    }
    const Matrix cb = c.apply(Matrix::column(b));
    const double t = static_cast<double>(c.T());
    return numkit::dot(a, cb.data()) / (t * t);
}

Vector phi_tilde_grid(std::span<const double> phi_col, double lambda, std::size_t T) {
    if (phi_col.size() != T) throw Error(ErrorCode::DimensionMismatch, "phi_tilde_grid: length");
    const std::size_t k = break_index(T, lambda);
    if (k < 1 || k >= T) throw Error(ErrorCode::BreakTooExtreme, "phi_tilde_grid: empty regime");
    double m1 = 0.0;
    double m2 = 0.0;
    for (std::size_t t = 0; t < k; ++t) m1 += phi_col[t];
    for (std::size_t t = k; t < T; ++t) m2 += phi_col[t];
    m1 /= static_cast<double>(k);
    m2 /= static_cast<double>(T - k);
    Vector out(T);
    for (std::size_t t = 0; t < k; ++t) out[t] = (phi_col[t] - m1) / lambda;
    for (std::size_t t = k; t < T; ++t) out[t] = -(phi_col[t] - m2) / (1.0 - lambda);
    return out;
}

Matrix phi_tilde_matrix(const Matrix& phi, double lambda) {
    Matrix out(phi.rows(), phi.cols());
    for (std::size_t j = 0; j < phi.cols(); ++j) {
        out.set_col(j, phi_tilde_grid(phi.col(j), lambda, phi.rows()));
    }
    return out;
}

Vector phi_tilde_zero(std::size_t T, double lambda) {
    const std::size_t k = break_index(T, lambda);
    Vector out(T);
    for (std::size_t t = 0; t < T; ++t) out[t] = t < k ? 1.0 / lambda : -1.0 / (1.0 - lambda);
    return out;
}

Vector phi_tilde_column_norms(const BasisSet& basis) {
    const Matrix tilde = phi_tilde_matrix(basis.matrix, basis.lambda);
    Vector norms(tilde.cols(), 0.0);
    for (std::size_t t = 0; t < tilde.rows(); ++t)
        for (std::size_t j = 0; j < tilde.cols(); ++j) norms[j] += tilde(t, j) * tilde(t, j);
    for (double& v : norms) v /= static_cast<double>(basis.T);
    return norms;
}

double norm_factor(const BasisSet& basis) {
    double s = 0.0;
    for (double v : phi_tilde_column_norms(basis)) s += v;
    return s / static_cast<double>(basis.K());
}

Matrix kernel_gram(const Matrix& phi, const KernelMatrix& c) {
    const double t = static_cast<double>(c.T());
    Matrix g = numkit::crossprod(phi, c.apply(phi));
    g *= 1.0 / (t * t);
    return g;
}

BasisSet gram_transform(const BasisSet& raw, const KernelMatrix& c) {
    if (raw.T != c.T()) throw Error(ErrorCode::DimensionMismatch, "gram_transform: T mismatch");
    const Matrix u = numkit::cholesky(kernel_gram(raw.matrix, c));
    BasisSet out;
    out.T = raw.T;
    out.lambda = c.lambda();
    out.family = BasisFamily::FourierTransformed;
    out.matrix = numkit::right_solve_upper(raw.matrix, u);
    out.gram_factor = u;
    return out;
}

BasisSet make_basis(BasisFamily family, std::size_t T, std::size_t K, double lambda) {
    validate_lambda(lambda);
    BasisSet raw = fourier_matrix(T, K);
    raw.lambda = lambda;
    if (family == BasisFamily::FourierRaw) return raw;
    return gram_transform(raw, kernel_matrix(T, lambda));
}

void dump_debug_csv(const std::filesystem::path& dir, const BasisSet& raw, const KernelMatrix& c,
                    const BasisSet& transformed) {
    std::filesystem::create_directories(dir);
    write_matrix_csv(dir / "phi.csv", raw.matrix);
    write_matrix_csv(dir / "ct.csv", c.dense());
    write_matrix_csv(dir / "ut.csv", transformed.gram_factor);
    write_matrix_csv(dir / "phistar.csv", transformed.matrix);
}

std::shared_ptr<const BasisSet> BasisCache::widest(BasisFamily family, std::size_t T, double lambda) {
    validate_lambda(lambda);
    const Key key{static_cast<int>(family), T, std::llround(lambda * 1e9)};
    {
        std::lock_guard lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    BasisSet raw = fourier_matrix(T, T - 2);
    raw.lambda = lambda;
    std::shared_ptr<const BasisSet> built;
    if (family == BasisFamily::FourierRaw) {
        built = std::make_shared<const BasisSet>(std::move(raw));
    } else {
        const KernelMatrix c(T, lambda);
        const Matrix u = numkit::cholesky_leading(kernel_gram(raw.matrix, c));
        if (u.rows() == 0) throw Error(ErrorCode::NotPositiveDefinite, "kernel Gram matrix has no PD leading block");
        BasisSet t;
        t.T = T;
        t.lambda = lambda;
        t.family = BasisFamily::FourierTransformed;
        t.matrix = numkit::right_solve_upper(raw.matrix.leading_cols(u.rows()), u);
        t.gram_factor = u;
        built = std::make_shared<const BasisSet>(std::move(t));
    }
    std::lock_guard lock(mutex_);
    return entries_.try_emplace(key, std::move(built)).first->second;
}

BasisSet BasisCache::get(BasisFamily family, std::size_t T, double lambda, std::size_t K) {
    const auto w = widest(family, T, lambda);
    if (K > w->K()) {
        throw Error(family == BasisFamily::FourierRaw ? ErrorCode::DimensionMismatch
                                                      : ErrorCode::NotPositiveDefinite,
                    "K = " + std::to_string(K) + " exceeds the usable maximum " + std::to_string(w->K()));
    }
    return w->leading(K);
}

std::size_t BasisCache::max_k(BasisFamily family, std::size_t T, double lambda) {
    return widest(family, T, lambda)->K();
}

}  // namespace hacchow::bases
