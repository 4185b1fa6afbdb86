#include "hacchow/chowtest.hpp"

#include "hacchow/error.hpp"
#include "hacchow/linalg.hpp"
#include "hacchow/longrun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hacchow::chowtest {

namespace {

using bases::BasisFamily;
using numkit::DistFamily;

constexpr std::array<Variant, 8> kVariants = {
    Variant::ChisqFourier,  Variant::NonstandardFourier,  Variant::ChisqTransformed,  Variant::FTransformed,
    Variant::NormalFourier, Variant::NonstandardTFourier, Variant::NormalTransformed, Variant::TTransformed,
};

const std::array<VariantInfo, 8> kInfo = {{
    {"chisq-fourier", BasisFamily::FourierRaw, false, Reference::ChiSquare},
    {"nonstandard-fourier", BasisFamily::FourierRaw, false, Reference::Nonstandard},
    {"chisq-transformed", BasisFamily::FourierTransformed, false, Reference::ChiSquare},
    {"f-transformed", BasisFamily::FourierTransformed, false, Reference::FisherF},
    {"normal-fourier", BasisFamily::FourierRaw, true, Reference::Normal},
    {"nonstandard-t-fourier", BasisFamily::FourierRaw, true, Reference::Nonstandard},
    {"normal-transformed", BasisFamily::FourierTransformed, true, Reference::Normal},
    {"t-transformed", BasisFamily::FourierTransformed, true, Reference::StudentT},
}};

Vector restricted(std::span<const double> beta_hat, const Matrix& r) {
    if (beta_hat.size() != r.cols()) throw Error(ErrorCode::DimensionMismatch, "R and beta-hat disagree");
    return r * beta_hat;
}

std::string rescaled_chi_square(std::size_t p, std::size_t K) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "chi-square(%zu) x %zu/%zu", p, K - p + 1, K * p);
    return buf;
}

}  // namespace

const VariantInfo& info(Variant v) noexcept { return kInfo[static_cast<std::size_t>(v)]; }

std::string_view variant_name(Variant v) noexcept { return info(v).name; }

std::optional<Variant> parse_variant(std::string_view name) noexcept {
    for (Variant v : kVariants)
        if (info(v).name == name) return v;
    return std::nullopt;
}

std::string_view reference_name(Reference r) noexcept {
    switch (r) {
        case Reference::ChiSquare: return "chi-square";
        case Reference::Normal: return "normal";
        case Reference::FisherF: return "fisher-F";
        case Reference::StudentT: return "student-t";
        case Reference::Nonstandard: return "nonstandard-simulated";
    }
    return "unknown";
}

std::span<const Variant> all_variants() noexcept { return kVariants; }

double wald_stat(std::span<const double> beta_hat, const Matrix& r, const Matrix& v, std::size_t T) {
    const Vector rb = restricted(beta_hat, r);
    if (v.rows() != rb.size() || !v.square()) throw Error(ErrorCode::DimensionMismatch, "V must be p x p");
    const Matrix x = numkit::spd_solve(v, Matrix::column(rb));
    double q = 0.0;
    for (std::size_t i = 0; i < rb.size(); ++i) q += rb[i] * x(i, 0);
    return static_cast<double>(T) * std::max(q, 0.0);
}

double t_stat(std::span<const double> beta_hat, const Matrix& r, const Matrix& v, std::size_t T) {
    if (r.rows() != 1) throw Error(ErrorCode::DomainError, "t statistic needs a single restriction");
    const Vector rb = restricted(beta_hat, r);
    if (v.rows() != 1 || v.cols() != 1) throw Error(ErrorCode::DimensionMismatch, "V must be 1 x 1");
    if (!(v(0, 0) > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "variance of R beta-hat is not positive");
    return std::sqrt(static_cast<double>(T)) * rb[0] / std::sqrt(v(0, 0));
}

double modified_f(double f, double norm_factor, double lambda) {
    return lambda * (1.0 - lambda) * norm_factor * f;
}

double modified_t(double t, double norm_factor, double lambda) {
    return std::sqrt(lambda * (1.0 - lambda) * norm_factor) * t;
}

double scaled_f(double f, std::size_t p, std::size_t K, double lambda) {
    if (K < p) throw Error(ErrorCode::KTooSmall, "K must be at least p");
    return static_cast<double>(K - p + 1) / static_cast<double>(K * p) * lambda * (1.0 - lambda) * f;
}

double scaled_t(double t, double lambda) { return std::sqrt(lambda * (1.0 - lambda)) * t; }

TestEngine::TestEngine(std::shared_ptr<fixedlimit::CvCache> cv_cache)
    : cv_(cv_cache ? std::move(cv_cache) : std::make_shared<fixedlimit::CvCache>()) {}

Prepared TestEngine::prepare(const regression::RegressionData& data, const regression::BreakHypothesis& hyp) const {
    Prepared prep;
    prep.fit = regression::ols_fit(data, hyp);
    prep.r = hyp.full_r();
    prep.T = data.T();
    prep.p = hyp.p();
    prep.lambda = data.lambda;
    return prep;
}

std::size_t TestEngine::k_upper(std::size_t T, double lambda) {
    return std::min(T - 2, bases_.max_k(BasisFamily::FourierTransformed, T, lambda));
}

autok::AutoKResult TestEngine::auto_k(const Prepared& prep) {
    return autok::choose_k(prep.r, prep.fit.q_hat, prep.fit.xz, prep.fit.residuals, k_upper(prep.T, prep.lambda));
}

TestReport TestEngine::evaluate(const Prepared& prep, Variant variant, std::size_t K, const TestOptions& options,
                                bool statistic_only) {
    const VariantInfo& vi = info(variant);
    if (vi.t_type && prep.p != 1) {
        throw Error(ErrorCode::DomainError, std::string(vi.name) + " needs a single restriction (p = 1)");
    }
    if (K < std::max<std::size_t>(prep.p, 1)) throw Error(ErrorCode::KTooSmall, "K must be at least p");
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw Error(ErrorCode::DomainError, "alpha must lie in (0,1)");

    const bases::BasisSet basis = bases_.get(vi.family, prep.T, prep.lambda, K);
    const longrun::LongRunEstimate est =
        longrun::estimate(basis, prep.fit.xz, prep.fit.residuals, prep.r, prep.fit.q_hat);

    TestReport rep;
    rep.variant = variant;
    rep.reference = vi.reference;
    rep.T = prep.T;
    rep.p = prep.p;
    rep.K = K;
    rep.lambda = prep.lambda;
    rep.alpha = options.alpha;
    rep.norm_factor = bases::norm_factor(basis);
    rep.beta_hat = prep.fit.beta_hat;
    rep.omega_hat = est.omega_hat;
    rep.sandwich = est.sandwich;

    if (vi.t_type) {
        rep.statistic_raw = t_stat(prep.fit.beta_hat, prep.r, est.sandwich, prep.T);
        rep.statistic_modified = modified_t(rep.statistic_raw, rep.norm_factor, prep.lambda);
        rep.statistic_scaled = scaled_t(rep.statistic_raw, prep.lambda);
    } else {
        rep.statistic_raw = wald_stat(prep.fit.beta_hat, prep.r, est.sandwich, prep.T);
        rep.statistic_modified = modified_f(rep.statistic_raw, rep.norm_factor, prep.lambda);
        rep.statistic_scaled = scaled_f(rep.statistic_raw, prep.p, K, prep.lambda);
    }
    rep.test_statistic =
        vi.family == BasisFamily::FourierRaw ? rep.statistic_modified : rep.statistic_scaled;
    if (!statistic_only) attach_reference(rep, options);
    return rep;
}

void TestEngine::attach_reference(TestReport& rep, const TestOptions& options) {
    const double alpha = options.alpha;
    const double x = rep.test_statistic;
    const auto p = static_cast<double>(rep.p);
    const auto K = static_cast<double>(rep.K);
    rep.alpha = alpha;
    switch (rep.variant) {
        case Variant::ChisqFourier: {
            const auto d = DistFamily::chi_square(p);
            rep.reference_detail = d.describe();
            rep.p_value = numkit::dist_sf(d, x);
            rep.critical_value = numkit::dist_quantile(d, 1.0 - alpha);
            break;
        }
        case Variant::ChisqTransformed: {
            // Scaled F against ((K - p + 1) / (K p)) chi-square(p).
            const auto d = DistFamily::chi_square(p);
            const double factor = (K - p + 1.0) / (K * p);
            rep.reference_detail = rescaled_chi_square(rep.p, rep.K);
            rep.p_value = numkit::dist_sf(d, x / factor);
            rep.critical_value = factor * numkit::dist_quantile(d, 1.0 - alpha);
            rep.alternate_p_value =
                numkit::dist_sf(d, rep.lambda * (1.0 - rep.lambda) * rep.statistic_raw);
            if ((rep.p_value < alpha) != (*rep.alternate_p_value < alpha)) {
                throw std::logic_error("chisq-transformed formulations disagree");
            }
            break;
        }
        case Variant::FTransformed: {
            const auto d = DistFamily::fisher_f(p, K - p + 1.0);
            rep.reference_detail = d.describe();
            rep.p_value = numkit::dist_sf(d, x);
            rep.critical_value = numkit::dist_quantile(d, 1.0 - alpha);
            break;
        }
        case Variant::NormalFourier:
        case Variant::NormalTransformed:
        case Variant::TTransformed: {
            const auto d = rep.variant == Variant::TTransformed ? DistFamily::student_t(K) : DistFamily::normal();
            rep.reference_detail = d.describe();
            rep.p_value = std::min(1.0, 2.0 * numkit::dist_sf(d, std::abs(x)));
            rep.critical_value = numkit::dist_quantile(d, 1.0 - alpha / 2.0);
            break;
        }
        case Variant::NonstandardFourier:
        case Variant::NonstandardTFourier: {
            const auto kind = limit_kind(rep.variant);
            const auto spec = limit_spec(rep.p, rep.K, rep.lambda, options);
            const auto dist = cv_->get(spec, kind);
            rep.reference_detail = std::string(fixedlimit::kind_name(kind)) + "(p=" + std::to_string(rep.p) +
                                   ",K=" + std::to_string(rep.K) + ",reps=" + std::to_string(spec.reps) + ")";
            if (kind == fixedlimit::LimitKind::TStarInf) {
                rep.p_value = fixedlimit::empirical_p_two_sided(*dist, x);
                rep.critical_value = fixedlimit::critical_value_two_sided(*dist, alpha);
            } else {
                rep.p_value = fixedlimit::empirical_p(*dist, x);
                rep.critical_value = fixedlimit::critical_value(*dist, alpha);
            }
            break;
        }
    }
    rep.reject = rep.p_value < alpha;
}

TestReport TestEngine::run(const regression::RegressionData& data, const regression::BreakHypothesis& hyp,
                           const TestOptions& options) {
    const Prepared prep = prepare(data, hyp);
    std::optional<autok::AutoKResult> chosen;
    std::size_t K = 0;
    if (options.K) {
        K = *options.K;
    } else {
        chosen = auto_k(prep);
        K = chosen->choice.K;
    }
    TestReport rep = evaluate(prep, options.variant, K, options);
    rep.autok = std::move(chosen);
    return rep;
}

fixedlimit::LimitSpec TestEngine::limit_spec(std::size_t p, std::size_t K, double lambda, const TestOptions& options) {
    fixedlimit::LimitSpec spec;
    spec.p = p;
    spec.K = K;
    spec.lambda = lambda;
    spec.family = BasisFamily::FourierRaw;
    spec.grid = options.limit_grid;
    spec.reps = options.limit_reps;
    spec.seed = options.limit_seed;
    return spec;
}

fixedlimit::LimitKind TestEngine::limit_kind(Variant variant) {
    return variant == Variant::NonstandardTFourier ? fixedlimit::LimitKind::TStarInf
                                                   : fixedlimit::LimitKind::FStarInf;
}

TestReport run_test(const regression::RegressionData& data, const regression::BreakHypothesis& hyp,
                    const TestOptions& options) {
    TestEngine engine;
    return engine.run(data, hyp, options);
}

}  // namespace hacchow::chowtest
