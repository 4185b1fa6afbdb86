#pragma once

// Frozen T = 12 data set with m = 2 break regressors (intercept and q)
// and one stable-coefficient covariate z.

#include "hacchow/regression.hpp"
#include "support/oracle.hpp"

namespace fixture {

inline constexpr double kLambda = 0.5;
inline constexpr double kY[12] = {0.83, -1.12, 0.47, 1.95, -0.36, 0.71, -2.04, 0.18, 1.27, -0.59, 0.92, -1.43};
inline constexpr double kQ[12] = {0.25, 1.10, -0.64, 0.38, 1.72, -1.05, 0.57, -0.21, 1.34, 0.09, -0.88, 0.66};
inline constexpr double kZ[12] = {1.40, 0.31, -0.77, 0.95, -1.26, 0.48, 0.12, -0.53, 0.86, -1.91, 0.27, 0.64};

inline hacchow::regression::RegressionData data() {
    hacchow::regression::RegressionData d;
    d.lambda = kLambda;
    d.y.assign(std::begin(kY), std::end(kY));
    d.x = hacchow::numkit::Matrix(12, 2);
    d.z = hacchow::numkit::Matrix(12, 1);
    for (std::size_t t = 0; t < 12; ++t) {
        d.x(t, 0) = 1.0;
        d.x(t, 1) = kQ[t];
        d.z(t, 0) = kZ[t];
    }
    return d;
}

inline oracle::Dense x_dense() {
    oracle::Dense x = oracle::zeros(12, 2);
    for (std::size_t t = 0; t < 12; ++t) x[t] = {1.0, kQ[t]};
    return x;
}

inline oracle::Dense z_dense() {
    oracle::Dense z = oracle::zeros(12, 1);
    for (std::size_t t = 0; t < 12; ++t) z[t][0] = kZ[t];
    return z;
}

inline std::vector<double> y_vector() { return {std::begin(kY), std::end(kY)}; }

}  // namespace fixture
