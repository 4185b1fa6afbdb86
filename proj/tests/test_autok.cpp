#include <catch2/catch_amalgamated.hpp>

#include "hacchow/autok.hpp"
#include "hacchow/bases.hpp"
#include "hacchow/error.hpp"
#include "hacchow/linalg.hpp"
#include "hacchow/longrun.hpp"
#include "hacchow/regression.hpp"
#include "hacchow/rng.hpp"
#include "support/fixture.hpp"

#include <cmath>
#include <numbers>

using namespace hacchow;
using namespace hacchow::autok;
using Catch::Approx;

namespace {

PluginModel scalar_model(double a, double sigma2) {
    VarFit fit;
    fit.a_hat = Matrix{{a}};
    fit.sigma_hat = Matrix{{sigma2}};
    fit.spectral_radius = std::abs(a);
    return build_plugin(fit);
}

Matrix ar1_series(std::size_t T, double a, std::uint64_t stream) {
    numkit::RngStream rng(5, stream);
    Matrix v(T, 1);
    double x = 0.0;
    for (std::size_t t = 0; t < T + 200; ++t) {
        x = a * x + rng.normal();
        if (t >= 200) v(t - 200, 0) = x;
    }
    return v;
}

}  // namespace

TEST_CASE("plug-in quantities for a scalar AR(1)", "[autok]") {
    const auto m = scalar_model(0.5, 1.0);
    CHECK(m.gamma0(0, 0) == Approx(4.0 / 3.0).epsilon(1e-13));
    CHECK(m.omega_v(0, 0) == Approx(4.0).epsilon(1e-13));
    CHECK(m.b_hat(0, 0) == Approx(16.0).epsilon(1e-12));
    const auto c = mse_optimal_k(m, 200, 1);
    const double expected = std::pow(9.0 * 2.0 * 16.0 / (std::pow(std::numbers::pi, 4) * 256.0), 0.2) *
                            std::pow(200.0, 0.8);
    CHECK(c.k_star == Approx(expected).epsilon(1e-12));
    CHECK(c.k_star == Approx(28.4).margin(0.05));
    CHECK(c.K == 28);
}

TEST_CASE("curvature matches the truncated autocovariance sum", "[autok]") {
    VarFit fit;
    fit.a_hat = Matrix{{0.4, 0.1}, {-0.2, 0.3}};
    fit.sigma_hat = Matrix{{1.0, 0.2}, {0.2, 0.5}};
    const auto m = build_plugin(fit);
    // Gamma(h) = A^h Gamma0 for h >= 1; B = sum_h h^2 (Gamma(h) + Gamma(h)').
    Matrix b(2, 2);
    Matrix power = Matrix::identity(2);
    for (int h = 1; h < 300; ++h) {
        power = power * fit.a_hat;
        const Matrix g = power * m.gamma0;
        b += (g + g.transpose()) * static_cast<double>(h * h);
    }
    CHECK(numkit::max_abs_diff(m.b_hat, b) < 1e-10);
    CHECK(numkit::max_abs_diff(m.b_hat, m.b_hat.transpose()) < 1e-12);
}

TEST_CASE("variance constant equals the commutation-matrix trace", "[autok]") {
    const Matrix omega{{2.0, 0.5, -0.3}, {0.5, 1.0, 0.2}, {-0.3, 0.2, 1.5}};
    const std::size_t p = 3;
    Matrix commutation(p * p, p * p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) commutation(i * p + j, j * p + i) = 1.0;
    const Matrix lhs = (Matrix::identity(p * p) + commutation) * numkit::kronecker(omega, omega);
    CHECK(variance_constant(omega) == Approx(lhs.trace()).epsilon(1e-13));
}

TEST_CASE("rounding, clamping and the flat-spectrum case", "[autok]") {
    const auto flat = scalar_model(0.0, 1.0);
    const auto c = mse_optimal_k(flat, 150, 1);
    CHECK(c.K == 148);
    CHECK(std::isinf(c.k_star));
    CHECK(mse_optimal_k(flat, 150, 2, 60).K == 60);
    CHECK(mse_optimal_k(scalar_model(0.95, 1.0), 50, 3).K >= 3);
    CHECK_THROWS_AS(mse_optimal_k(flat, 150, 5, 4), Error);
}

TEST_CASE("selected K is non-increasing in persistence and stays in range", "[autok]") {
    std::size_t previous = 1000000;
    for (int i = 0; i <= 95; i += 5) {
        const auto c = mse_optimal_k(scalar_model(i / 100.0, 1.0), 300, 1);
        CHECK(c.K <= previous);
        CHECK(c.K >= 2);
        CHECK(c.K <= 298);
        previous = c.K;
    }
}

TEST_CASE("VAR(1) least squares recovers the coefficient", "[autok]") {
    const auto iid = fit_var1(ar1_series(10000, 0.0, 1));
    CHECK(std::abs(iid.a_hat(0, 0)) <= 0.05);
    const auto ar = fit_var1(ar1_series(10000, 0.8, 2));
    CHECK(ar.a_hat(0, 0) >= 0.75);
    CHECK(ar.a_hat(0, 0) <= 0.85);
    CHECK_FALSE(ar.clamped);
    CHECK_THROWS_AS(fit_var1(Matrix(50, 1, 3.0)), Error);
    CHECK_THROWS_AS(fit_var1(Matrix(8, 1, 1.0)), Error);
}

TEST_CASE("near-unit-root fits are clamped to the stability radius", "[autok]") {
    const auto fit = fit_var1(ar1_series(2000, 0.995, 3));
    CHECK(fit.clamped);
    CHECK(fit.spectral_radius > kStabilityClamp);
    CHECK(numkit::spectral_radius(fit.a_hat) == Approx(kStabilityClamp).epsilon(1e-9));
}

TEST_CASE("selected K is scale invariant", "[autok]") {
    const Matrix v = ar1_series(400, 0.6, 4);
    const auto k1 = mse_optimal_k(build_plugin(fit_var1(v)), 400, 1).K;
    const auto k2 = mse_optimal_k(build_plugin(fit_var1(v * 37.5)), 400, 1).K;
    CHECK(k1 == k2);
}

TEST_CASE("score series reproduces the sandwich variance", "[autok]") {
    const auto d = fixture::data();
    const auto hyp = regression::BreakHypothesis::all_coefficients(2);
    const auto fit = regression::ols_fit(d, hyp);
    const Matrix r = hyp.full_r();
    const Matrix v = score_series(r, fit.q_hat, fit.xz, fit.residuals);
    CHECK(v.rows() == 12);
    CHECK(v.cols() == 2);
    const auto basis = bases::make_basis(bases::BasisFamily::FourierRaw, 12, 6, 0.5);
    Matrix g = numkit::crossprod(basis.matrix, v);
    g *= 1.0 / std::sqrt(12.0);
    Matrix direct = numkit::crossprod(g, g);
    direct *= 1.0 / 6.0;
    const auto est = longrun::estimate(basis, fit.xz, fit.residuals, r, fit.q_hat);
    CHECK(numkit::max_abs_diff(direct, est.sandwich) < 1e-10 * est.sandwich.max_abs());

    const numkit::Vector zero(12, 0.0);
    CHECK(score_series(r, fit.q_hat, fit.xz, zero).max_abs() == 0.0);
    const Matrix r1 = regression::BreakHypothesis{Matrix{{1, 0}}}.full_r();
    CHECK(score_series(r1, fit.q_hat, fit.xz, fit.residuals).cols() == 1);
}
