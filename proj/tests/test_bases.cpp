#include <catch2/catch_amalgamated.hpp>

#include "hacchow/bases.hpp"
#include "hacchow/error.hpp"
#include "hacchow/linalg.hpp"
#include "support/oracle.hpp"

#include <cmath>
#include <filesystem>

using namespace hacchow;
using namespace hacchow::bases;
using Catch::Approx;

namespace {

double max_dev_from_identity(const Matrix& g) {
    double d = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) d = std::max(d, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return d;
}

}  // namespace

TEST_CASE("break index guards representation error", "[bases]") {
    CHECK(break_index(100, 0.29) == 29);
    CHECK(break_index(100, 0.4) == 40);
    CHECK(break_index(101, 0.4) == 40);
    CHECK_THROWS_AS(break_index(100, 0.0), Error);
    CHECK_THROWS_AS(break_index(100, 1.0), Error);
}

TEST_CASE("Fourier columns match the cosine-sine definition", "[bases]") {
    const auto b = fourier_matrix(37, 7);
    const auto o = oracle::fourier(37, 7);
    for (std::size_t t = 0; t < 37; ++t)
        for (std::size_t k = 0; k < 7; ++k) CHECK(b.matrix(t, k) == Approx(o[t][k]).margin(1e-14));
    CHECK_THROWS_AS(fourier_matrix(10, 9), Error);
    CHECK_THROWS_AS(fourier_matrix(10, 0), Error);
}

TEST_CASE("kernel entries, dense form and implicit product", "[bases]") {
    const std::size_t T = 20;
    const KernelMatrix c(T, 0.35);
    const auto o = oracle::kernel(T, 0.35);
    const Matrix dense = c.dense();
    for (std::size_t i = 1; i <= T; ++i)
        for (std::size_t j = 1; j <= T; ++j) {
            CHECK(c.entry(i, j) == Approx(o[i - 1][j - 1]).margin(1e-12));
            CHECK(dense(i - 1, j - 1) == c.entry(i, j));
        }
    const Matrix phi = fourier_matrix(T, 5).matrix;
    CHECK(numkit::max_abs_diff(c.apply(phi), dense * phi) < 1e-11);
    CHECK_THROWS_AS(KernelMatrix(20, 0.05), Error);
}

TEST_CASE("phi-tilde of a short vector", "[bases]") {
    // Regime means 1.5 and 3.5; deviations scaled by 1/0.5 and -1/0.5.
    const Vector out = phi_tilde_grid(Vector{1, 2, 3, 4}, 0.5, 4);
    CHECK(out == Vector{-1, 1, 1, -1});
    const Vector zero = phi_tilde_zero(5, 0.4);
    CHECK(zero == Vector{2.5, 2.5, -1.0 / 0.6, -1.0 / 0.6, -1.0 / 0.6});
}

TEST_CASE("kernel Gram equals the phi-tilde summation matrix when lambda T is an integer", "[bases]") {
    for (auto [T, lambda] : {std::pair<std::size_t, double>{100, 0.4}, {50, 0.5}, {30, 0.3}}) {
        const auto raw = fourier_matrix(T, T - 2);
        const Matrix g = kernel_gram(raw.matrix, KernelMatrix(T, lambda));
        Matrix tilde(T, T - 2);
        for (std::size_t k = 0; k < T - 2; ++k) tilde.set_col(k, oracle::phi_tilde(raw.matrix.col(k), lambda));
        Matrix s = numkit::crossprod(tilde, tilde);
        s *= 1.0 / static_cast<double>(T);
        CHECK(numkit::max_abs_diff(g, s) <= 1e-10);
    }
}

TEST_CASE("transformed basis is kernel-orthonormal and matches classical Gram-Schmidt", "[bases]") {
    const std::size_t T = 24;
    const double lambda = 0.375;
    const auto t = make_basis(BasisFamily::FourierTransformed, T, 6, lambda);
    const auto c = oracle::kernel(T, lambda);
    const auto gs = oracle::gram_schmidt(oracle::fourier(T, 6), c);
    for (std::size_t i = 0; i < T; ++i)
        for (std::size_t k = 0; k < 6; ++k) CHECK(t.matrix(i, k) == Approx(gs[i][k]).margin(1e-10));
    CHECK(max_dev_from_identity(kernel_gram(t.matrix, KernelMatrix(T, lambda))) < 1e-12);
    CHECK(norm_factor(t) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("leading columns do not depend on the total K", "[bases]") {
    const auto wide = make_basis(BasisFamily::FourierTransformed, 60, 20, 0.4);
    const auto narrow = make_basis(BasisFamily::FourierTransformed, 60, 8, 0.4);
    CHECK(numkit::max_abs_diff(wide.leading(8).matrix, narrow.matrix) < 1e-12);
}

TEST_CASE("norm factor of raw Fourier vectors by direct summation", "[bases]") {
    const std::size_t T = 100;
    const auto raw = make_basis(BasisFamily::FourierRaw, T, 4, 0.4);
    const auto o = oracle::fourier(T, 4);
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k)
        for (double v : oracle::phi_tilde(oracle::column(o, k), 0.4)) s += v * v;
    CHECK(norm_factor(raw) == Approx(s / (4.0 * T)).epsilon(1e-12));
}

TEST_CASE("basis cache serves truncations and reports the usable maximum", "[bases]") {
    BasisCache cache;
    const auto b = cache.get(BasisFamily::FourierTransformed, 50, 0.4, 10);
    CHECK(numkit::max_abs_diff(b.matrix, make_basis(BasisFamily::FourierTransformed, 50, 10, 0.4).matrix) < 1e-10);
    CHECK(cache.max_k(BasisFamily::FourierRaw, 50, 0.4) == 48);
    // An even break index makes the alternating direction degenerate at K = T - 2.
    const std::size_t kmax = cache.max_k(BasisFamily::FourierTransformed, 50, 0.4);
    CHECK(kmax >= 40);
    CHECK(kmax <= 48);
    CHECK_THROWS_AS(cache.get(BasisFamily::FourierRaw, 50, 0.4, 49), Error);
}

TEST_CASE("debug dump writes the four matrices", "[bases]") {
    const auto dir = std::filesystem::temp_directory_path() / "hacchow_bases_dump";
    const auto raw = make_basis(BasisFamily::FourierRaw, 12, 4, 0.5);
    const auto t = make_basis(BasisFamily::FourierTransformed, 12, 4, 0.5);
    dump_debug_csv(dir, raw, KernelMatrix(12, 0.5), t);
    for (const char* f : {"phi.csv", "ct.csv", "ut.csv", "phistar.csv"}) CHECK(std::filesystem::exists(dir / f));
    std::filesystem::remove_all(dir);
}
