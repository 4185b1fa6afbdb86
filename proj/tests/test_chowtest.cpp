#include <catch2/catch_amalgamated.hpp>

#include "hacchow/chowtest.hpp"
#include "hacchow/error.hpp"
#include "hacchow/rng.hpp"
#include "support/fixture.hpp"
#include "support/oracle.hpp"

#include <cmath>

using namespace hacchow;
using namespace hacchow::chowtest;
using Catch::Approx;
using regression::BreakHypothesis;
using regression::RegressionData;

namespace {

RegressionData sample(std::size_t T, double lambda, std::uint64_t stream, double shift = 0.0) {
    numkit::RngStream rng(11, stream);
    RegressionData d;
    d.lambda = lambda;
    d.x = Matrix(T, 2);
    d.z = Matrix(T, 1);
    double q = 0.0, u = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        q = 0.5 * q + rng.normal();
        u = 0.5 * u + rng.normal();
        d.x(t, 0) = 1.0;
        d.x(t, 1) = q;
        d.z(t, 0) = rng.normal();
        const bool late = static_cast<double>(t + 1) > lambda * static_cast<double>(T);
        d.y.push_back(0.3 * d.z(t, 0) + (late ? shift * (1.0 + q) : 0.0) + u);
    }
    return d;
}

TestOptions fixed(Variant v, std::size_t K) {
    TestOptions o;
    o.variant = v;
    o.K = K;
    o.limit_reps = 2000;
    o.limit_grid = 200;
    return o;
}

const BreakHypothesis kSlope{Matrix{{0, 1}}};

}  // namespace

TEST_CASE("variant names round-trip", "[chowtest]") {
    CHECK(all_variants().size() == 8);
    for (Variant v : all_variants()) CHECK(parse_variant(variant_name(v)) == v);
    CHECK_FALSE(parse_variant("bogus"));
    CHECK(info(Variant::FTransformed).family == bases::BasisFamily::FourierTransformed);
    CHECK(info(Variant::NonstandardTFourier).t_type);
}

TEST_CASE("Wald statistic edge cases and F = t squared", "[chowtest]") {
    const Matrix r{{1, 0, -1, 0}, {0, 1, 0, -1}};
    const Matrix v{{2.0, 0.3}, {0.3, 1.0}};
    CHECK(wald_stat(Vector{1.5, -2.0, 1.5, -2.0}, r, v, 50) == 0.0);
    CHECK_THROWS_AS(wald_stat(Vector{1, 2, 3, 4}, r, Matrix{{1, 1}, {1, 1}}, 50), Error);

    const Matrix r1{{0, 1, 0, -1}};
    const Vector b{0.2, 0.7, -0.1, 0.4};
    const Matrix v1{{0.8}};
    const double t = t_stat(b, r1, v1, 64);
    CHECK(t == Approx(8.0 * 0.3 / std::sqrt(0.8)).epsilon(1e-14));
    CHECK(wald_stat(b, r1, v1, 64) == Approx(t * t).epsilon(1e-13));
}

TEST_CASE("statistic scalings", "[chowtest]") {
    CHECK(modified_f(10.0, 1.0, 0.5) == Approx(2.5));
    CHECK(scaled_f(1.0, 2, 2, 0.4) == Approx(0.06));
    CHECK(scaled_f(1.0, 1, 8, 0.5) == Approx(0.25));
    CHECK(scaled_t(2.0, 0.5) == Approx(1.0));
    CHECK(modified_t(2.0, 4.0, 0.5) == Approx(2.0));
    CHECK_THROWS_AS(scaled_f(1.0, 3, 2, 0.4), Error);
}

TEST_CASE("statistics on the frozen fixture match the dense oracle", "[chowtest]") {
    const auto hyp = BreakHypothesis::all_coefficients(2);
    const auto o_basis = oracle::gram_schmidt(oracle::fourier(12, 4), oracle::kernel(12, fixture::kLambda));
    const auto o = oracle::chow(fixture::y_vector(), fixture::x_dense(), fixture::z_dense(), fixture::kLambda, o_basis);
    const auto rep = run_test(fixture::data(), hyp, fixed(Variant::FTransformed, 4));
    CHECK(rep.statistic_raw == Approx(o.wald).epsilon(1e-9));
    CHECK(rep.test_statistic == Approx(3.0 / 8.0 * 0.25 * o.wald).epsilon(1e-9));
    CHECK(rep.reference_detail == "fisher-F(2,3)");
}

TEST_CASE("reference distributions for the closed-form variants", "[chowtest]") {
    const auto d = sample(200, 0.4, 1);
    const auto hyp = BreakHypothesis::all_coefficients(2);
    const auto f = run_test(d, hyp, fixed(Variant::FTransformed, 8));
    CHECK(f.critical_value == Approx(4.737414).epsilon(1e-5));
    CHECK(f.reject == (f.test_statistic > f.critical_value));
    const auto c = run_test(d, hyp, fixed(Variant::ChisqFourier, 8));
    CHECK(c.critical_value == Approx(5.991465).epsilon(1e-6));
    CHECK(c.reject == (c.test_statistic > c.critical_value));

    const auto ct = run_test(d, hyp, fixed(Variant::ChisqTransformed, 8));
    REQUIRE(ct.alternate_p_value);
    CHECK(*ct.alternate_p_value == Approx(ct.p_value).epsilon(1e-12));
    CHECK(ct.critical_value == Approx(5.991465 * 7.0 / 16.0).epsilon(1e-6));
    CHECK(ct.test_statistic == Approx(f.test_statistic).epsilon(1e-14));
}

TEST_CASE("t and F decisions coincide for a single restriction", "[chowtest]") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto d = sample(150, 0.4, 100 + s, 0.4);
        const auto f = run_test(d, kSlope, fixed(Variant::FTransformed, 6));
        const auto t = run_test(d, kSlope, fixed(Variant::TTransformed, 6));
        CHECK(t.statistic_raw * t.statistic_raw == Approx(f.statistic_raw).epsilon(1e-10));
        CHECK(t.p_value == Approx(f.p_value).epsilon(1e-8));
        CHECK(t.reject == f.reject);
        const auto cf = run_test(d, kSlope, fixed(Variant::ChisqFourier, 6));
        const auto nt = run_test(d, kSlope, fixed(Variant::NormalFourier, 6));
        CHECK(nt.p_value == Approx(cf.p_value).epsilon(1e-8));
    }
    CHECK_THROWS_AS(run_test(sample(150, 0.4, 1), BreakHypothesis::all_coefficients(2),
                             fixed(Variant::NormalFourier, 6)),
                    Error);
}

TEST_CASE("statistics are invariant to regressor rescaling and the scale of Y", "[chowtest]") {
    const auto d = sample(120, 0.4, 7, 0.3);
    const auto hyp = BreakHypothesis::all_coefficients(2);
    for (Variant v : {Variant::ChisqFourier, Variant::FTransformed}) {
        const auto base = run_test(d, hyp, fixed(v, 6));
        auto scaled = d;
        for (std::size_t t = 0; t < scaled.T(); ++t) {
            scaled.x(t, 1) = 2.0 * d.x(t, 1) + 0.5 * d.x(t, 0);
            scaled.x(t, 0) = -3.0 * d.x(t, 0);
            scaled.y[t] = 4.5 * d.y[t];
            scaled.z(t, 0) = 0.1 * d.z(t, 0);
        }
        const auto other = run_test(scaled, hyp, fixed(v, 6));
        CHECK(other.test_statistic == Approx(base.test_statistic).epsilon(1e-9));
    }
}

TEST_CASE("nonstandard references use the simulated limit", "[chowtest]") {
    TestEngine engine;
    const auto d = sample(120, 0.4, 3);
    const auto rep = engine.run(d, BreakHypothesis::all_coefficients(2), fixed(Variant::NonstandardFourier, 6));
    const auto dist = engine.cv_cache().get(TestEngine::limit_spec(2, 6, 0.4, fixed(Variant::NonstandardFourier, 6)),
                                            fixedlimit::LimitKind::FStarInf);
    CHECK(rep.p_value == fixedlimit::empirical_p(*dist, rep.test_statistic));
    CHECK(rep.critical_value == fixedlimit::critical_value(*dist, 0.05));
    const auto t = engine.run(d, kSlope, fixed(Variant::NonstandardTFourier, 6));
    CHECK(t.p_value > 0.0);
    CHECK(t.p_value <= 1.0);
}

TEST_CASE("data-driven K stays in range and is reported", "[chowtest]") {
    TestEngine engine;
    TestOptions o;
    o.variant = Variant::FTransformed;
    const auto d = sample(100, 0.4, 9);
    const auto rep = engine.run(d, BreakHypothesis::all_coefficients(2), o);
    REQUIRE(rep.autok);
    CHECK(rep.K == rep.autok->choice.K);
    CHECK(rep.K >= 2);
    CHECK(rep.K <= engine.k_upper(100, 0.4));
}

TEST_CASE("statistic-only evaluation defers the reference", "[chowtest]") {
    TestEngine engine;
    const auto prep = engine.prepare(sample(100, 0.4, 4), BreakHypothesis::all_coefficients(2));
    const auto opts = fixed(Variant::FTransformed, 8);
    auto rep = engine.evaluate(prep, Variant::FTransformed, 8, opts, true);
    CHECK(rep.reference_detail.empty());
    engine.attach_reference(rep, opts);
    const auto full = engine.evaluate(prep, Variant::FTransformed, 8, opts);
    CHECK(rep.p_value == full.p_value);
    CHECK(rep.reject == full.reject);
    CHECK_THROWS_AS(engine.evaluate(prep, Variant::FTransformed, 1, opts), Error);
}
