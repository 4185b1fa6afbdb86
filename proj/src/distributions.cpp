#include "hacchow/distributions.hpp"

#include "hacchow/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace hacchow::numkit {

namespace {

constexpr int kMaxIter = 1000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

double gamma_series(double a, double x) {
    double sum = 1.0 / a;
    double term = sum;
    double ap = a;
    for (int n = 0; n < kMaxIter; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma Q(a, x) by the modified Lentz continued fraction.
double gamma_continued_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double regularized_gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_series(a, x);
    return gamma_continued_fraction(a, x);
}

double beta_continued_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m < kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return h;
}

void check_params(const DistFamily& d) {
    if (d.family == Family::Normal) return;
    if (!(d.df1 > 0.0) || !std::isfinite(d.df1)) {
        throw Error(ErrorCode::DomainError, "degrees of freedom must be positive");
    }
    if (d.family == Family::FisherF && (!(d.df2 > 0.0) || !std::isfinite(d.df2))) {
        throw Error(ErrorCode::DomainError, "degrees of freedom must be positive");
    }
}

bool positive_support(const DistFamily& d) {
    return d.family == Family::ChiSquare || d.family == Family::FisherF;
}

}  // namespace

std::string DistFamily::describe() const {
    std::ostringstream os;
    switch (family) {
        case Family::Normal: os << "normal"; break;
        case Family::ChiSquare: os << "chi-square(" << df1 << ")"; break;
        case Family::StudentT: os << "student-t(" << df1 << ")"; break;
        case Family::FisherF: os << "fisher-F(" << df1 << "," << df2 << ")"; break;
    }
    return os.str();
}

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw Error(ErrorCode::DomainError, "gamma shape must be positive");
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return gamma_series(a, x);
    return 1.0 - gamma_continued_fraction(a, x);
}

double regularized_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::DomainError, "beta parameters must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double dist_pdf(const DistFamily& d, double x) {
    check_params(d);
    switch (d.family) {
        case Family::Normal:
            return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        case Family::ChiSquare: {
            if (x <= 0.0) return 0.0;
            const double k = 0.5 * d.df1;
            return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::numbers::ln2 - std::lgamma(k));
        }
        case Family::StudentT: {
            const double v = d.df1;
            return std::exp(std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) -
                            0.5 * std::log(v * std::numbers::pi) -
                            0.5 * (v + 1.0) * std::log1p(x * x / v));
        }
        case Family::FisherF: {
            if (x <= 0.0) return 0.0;
            const double a = 0.5 * d.df1;
            const double b = 0.5 * d.df2;
            const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
            return std::exp(a * std::log(d.df1 / d.df2) + (a - 1.0) * std::log(x) -
                            (a + b) * std::log1p(d.df1 * x / d.df2) - log_beta);
        }
    }
    return 0.0;
}

double dist_cdf(const DistFamily& d, double x) {
    check_params(d);
    switch (d.family) {
        case Family::Normal:
            return 0.5 * std::erfc(-x / std::numbers::sqrt2);
        case Family::ChiSquare:
            return regularized_gamma_p(0.5 * d.df1, 0.5 * x);
        case Family::StudentT: {
            const double v = d.df1;
            const double tail = 0.5 * regularized_beta(0.5 * v, 0.5, v / (v + x * x));
            return x > 0.0 ? 1.0 - tail : tail;
        }
        case Family::FisherF: {
            if (x <= 0.0) return 0.0;
            const double z = d.df1 * x;
            return regularized_beta(0.5 * d.df1, 0.5 * d.df2, z / (z + d.df2));
        }
    }
    return 0.0;
}

double dist_sf(const DistFamily& d, double x) {
    check_params(d);
    switch (d.family) {
        case Family::Normal:
            return 0.5 * std::erfc(x / std::numbers::sqrt2);
        case Family::ChiSquare:
            return regularized_gamma_q(0.5 * d.df1, 0.5 * x);
        case Family::StudentT: {
            const double v = d.df1;
            const double tail = 0.5 * regularized_beta(0.5 * v, 0.5, v / (v + x * x));
            return x > 0.0 ? tail : 1.0 - tail;
        }
        case Family::FisherF: {
            if (x <= 0.0) return 1.0;
            const double z = d.df1 * x;
            return regularized_beta(0.5 * d.df2, 0.5 * d.df1, d.df2 / (z + d.df2));
        }
    }
    return 0.0;
}

double dist_quantile(const DistFamily& d, double q) {
    check_params(d);
    if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::DomainError, "quantile level must lie in (0,1)");

    // Work on whichever tail keeps the target away from 1 to avoid cancellation.
    const bool upper = q > 0.5;
    const double target = upper ? 1.0 - q : q;
    auto residual = [&](double x) { return upper ? target - dist_sf(d, x) : dist_cdf(d, x) - target; };

    double lo;
    double hi;
    if (positive_support(d)) {
        lo = 0.0;
        hi = 1.0;
        while (residual(hi) < 0.0) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e300) throw Error(ErrorCode::DomainError, "quantile bracket overflow");
        }
    } else {
        lo = -1.0;
        hi = 1.0;
        while (residual(lo) > 0.0) lo *= 2.0;
        while (residual(hi) < 0.0) hi *= 2.0;
    }

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 400; ++it) {
        const double f = residual(x);
        if (f == 0.0) return x;
        if (f < 0.0) lo = x; else hi = x;
        const double pdf = dist_pdf(d, x);
        double next = (pdf > 0.0 && std::isfinite(pdf)) ? x - f / pdf : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x)) || hi - lo <= 1e-15 * std::max(1.0, std::abs(x))) {
            return next;
        }
        x = next;
    }
    return x;
}

}  // namespace hacchow::numkit
