#pragma once

#include <string>

namespace hacchow::numkit {

enum class Family { Normal, ChiSquare, StudentT, FisherF };

/// A reference distribution. `df1` is used by chi-square, t and F; `df2` by F only.
struct DistFamily {
    Family family = Family::Normal;
    double df1 = 1.0;
    double df2 = 1.0;

    [[nodiscard]] static DistFamily normal() { return {Family::Normal, 1.0, 1.0}; }
    [[nodiscard]] static DistFamily chi_square(double k) { return {Family::ChiSquare, k, 1.0}; }
    [[nodiscard]] static DistFamily student_t(double k) { return {Family::StudentT, k, 1.0}; }
    [[nodiscard]] static DistFamily fisher_f(double d1, double d2) { return {Family::FisherF, d1, d2}; }

    [[nodiscard]] std::string describe() const;
};

/// Regularized lower incomplete gamma P(a, x).
[[nodiscard]] double regularized_gamma_p(double a, double x);
/// Regularized incomplete beta I_x(a, b).
[[nodiscard]] double regularized_beta(double a, double b, double x);

[[nodiscard]] double dist_pdf(const DistFamily& d, double x);
[[nodiscard]] double dist_cdf(const DistFamily& d, double x);
/// Upper tail 1 - cdf, computed without cancellation where the family allows it.
[[nodiscard]] double dist_sf(const DistFamily& d, double x);
/// Inverse cdf for 0 < q < 1 (safeguarded Newton inside a bisection bracket).
[[nodiscard]] double dist_quantile(const DistFamily& d, double q);

}  // namespace hacchow::numkit
