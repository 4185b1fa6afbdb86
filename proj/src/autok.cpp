#include "hacchow/autok.hpp"

#include "hacchow/error.hpp"
#include "hacchow/linalg.hpp"
#include "hacchow/longrun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hacchow::autok {

Matrix score_series(const Matrix& r, const Matrix& q_hat, const Matrix& xz, std::span<const double> u_hat) {
    const Matrix a = numkit::spd_solve(q_hat, r.transpose());  // Q^{-1} R'
    return longrun::score_matrix(xz, u_hat) * a;
}

VarFit fit_var1(const Matrix& v) {
    const std::size_t T = v.rows();
    const std::size_t p = v.cols();
    if (p == 0 || T < p + 10) throw Error(ErrorCode::DimensionMismatch, "fit_var1 needs T >= p + 10");

    const Matrix lagged = v.block(0, 0, T - 1, p);
    const Matrix current = v.block(1, 0, T - 1, p);
    // A' = (L'L)^{-1} L'C
    const Matrix a_t = numkit::spd_solve(numkit::crossprod(lagged, lagged), numkit::crossprod(lagged, current));

    VarFit fit;
    fit.a_hat = a_t.transpose();
    const Matrix resid = current - lagged * a_t;
    fit.sigma_hat = numkit::symmetrize(numkit::crossprod(resid, resid) *
                                       (1.0 / static_cast<double>(T - 1 - p)));
    for (std::size_t j = 0; j < p; ++j) {
        double level = 0.0;
        for (std::size_t t = 0; t < T; ++t) level += v(t, j) * v(t, j);
        if (!(fit.sigma_hat(j, j) > numkit::kSpdTolerance * level / static_cast<double>(T))) {
            throw Error(ErrorCode::NotPositiveDefinite, "score series is degenerate: zero innovation variance");
        }
    }
    (void)numkit::cholesky(fit.sigma_hat);
    fit.spectral_radius = numkit::spectral_radius(fit.a_hat);
    if (fit.spectral_radius > kStabilityClamp) {
        fit.a_hat *= kStabilityClamp / fit.spectral_radius;
        fit.clamped = true;
    }
    return fit;
}

PluginModel build_plugin(const VarFit& fit) {
    const std::size_t p = fit.a_hat.rows();
    const Matrix eye = Matrix::identity(p);
    PluginModel model;
    model.a_hat = fit.a_hat;
    model.sigma_hat = fit.sigma_hat;
    model.spectral_radius = fit.spectral_radius;
    model.clamped = fit.clamped;
    model.gamma0 = numkit::lyapunov_solve(fit.a_hat, fit.sigma_hat);

    const Matrix inv = numkit::inverse(eye - fit.a_hat);
    model.omega_v = numkit::symmetrize(inv * fit.sigma_hat * inv.transpose());

    // sum_{h>=1} h^2 A^h = A (I + A) (I - A)^{-3}; all factors commute.
    const Matrix s = fit.a_hat * (eye + fit.a_hat) * inv * inv * inv * model.gamma0;
    model.b_hat = s + s.transpose();
    return model;
}

double variance_constant(const Matrix& omega_v) {
    const double tr = omega_v.trace();
    return tr * tr + (omega_v * omega_v).trace();
}

KChoice mse_optimal_k(const PluginModel& model, std::size_t T, std::size_t p, std::optional<std::size_t> k_max) {
    KChoice choice;
    choice.k_min = std::max<std::size_t>(p, 2);
    choice.k_max = k_max.value_or(T >= 2 ? T - 2 : 0);
    if (choice.k_max < choice.k_min) {
        throw Error(ErrorCode::KTooSmall, "no admissible K: k_max below max(p, 2)");
    }
    const double curvature = std::pow(model.b_hat.frobenius(), 2);
    if (curvature == 0.0) {
        choice.k_star = std::numeric_limits<double>::infinity();
        choice.K = choice.k_max;
        return choice;
    }
    const double pi4 = std::pow(std::numbers::pi, 4);
    const double ratio = 9.0 * variance_constant(model.omega_v) / (pi4 * curvature);
    choice.k_star = std::pow(ratio, 0.2) * std::pow(static_cast<double>(T), 0.8);
    const double rounded = std::floor(choice.k_star + 0.5);
    if (!(rounded < static_cast<double>(choice.k_max))) {
        choice.K = choice.k_max;
    } else if (rounded < static_cast<double>(choice.k_min)) {
        choice.K = choice.k_min;
    } else {
        choice.K = static_cast<std::size_t>(rounded);
    }
    return choice;
}

AutoKResult choose_k(const Matrix& r, const Matrix& q_hat, const Matrix& xz, std::span<const double> u_hat,
                     std::optional<std::size_t> k_max) {
    const Matrix v = score_series(r, q_hat, xz, u_hat);
    AutoKResult out;
    out.model = build_plugin(fit_var1(v));
    out.choice = mse_optimal_k(out.model, xz.rows(), r.rows(), k_max);
    return out;
}

}  // namespace hacchow::autok
