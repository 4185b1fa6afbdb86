#include <catch2/catch_amalgamated.hpp>

#include "hacchow/error.hpp"
#include "hacchow/mcstudy.hpp"

#include <cmath>
#include <sstream>

using namespace hacchow;
using namespace hacchow::mcstudy;
using chowtest::Variant;
using Catch::Approx;

namespace {

double lag1_autocorrelation(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < v.size(); ++t) {
        den += (v[t] - mean) * (v[t] - mean);
        if (t > 0) num += (v[t] - mean) * (v[t - 1] - mean);
    }
    return num / den;
}

StudyOptions quick(unsigned workers = 1) {
    StudyOptions o;
    o.reps = 500;
    o.seed = 99;
    o.workers = workers;
    o.test.limit_reps = 2000;
    o.test.limit_grid = 200;
    return o;
}

}  // namespace

TEST_CASE("simulated series have the designed persistence", "[mcstudy]") {
    DgpSpec spec;
    spec.T = 10000;
    spec.rho = 0.9;
    const auto d = simulate_dgp(spec, 1, 2);
    CHECK(std::abs(lag1_autocorrelation(d.y) - 0.9) <= 0.05);
    CHECK(std::abs(lag1_autocorrelation(d.x.col(1)) - 0.9) <= 0.05);
    spec.rho = 0.0;
    const auto iid = simulate_dgp(spec, 1, 3);
    CHECK(std::abs(lag1_autocorrelation(iid.y)) <= 4.0 / std::sqrt(10000.0));
    // ARMA(1,1): first autocorrelation (1 + rho psi)(rho + psi) / (1 + 2 rho psi + psi^2).
    spec.rho = 0.6;
    spec.psi = 0.6;
    const auto arma = simulate_dgp(spec, 1, 4);
    CHECK(std::abs(lag1_autocorrelation(arma.y) - 1.36 * 1.2 / 2.08) <= 0.05);
}

TEST_CASE("the break enters only after the break date", "[mcstudy]") {
    DgpSpec spec;
    spec.T = 100;
    spec.rho = 0.6;
    const auto null = simulate_dgp(spec, 5, 6);
    spec.delta = 1.5;
    const auto alt = simulate_dgp(spec, 5, 6);
    CHECK(null.x == alt.x);
    CHECK(null.z.cols() == 0);
    for (std::size_t t = 0; t < 100; ++t) {
        const double expected = t < 40 ? 0.0 : 1.5 * (1.0 + null.x(t, 1));
        CHECK(alt.y[t] - null.y[t] == Approx(expected).margin(1e-12));
    }
    CHECK(simulate_dgp(spec, 5, 6).y == alt.y);
    CHECK(simulate_dgp(spec, 5, 7).y != alt.y);
}

TEST_CASE("design validation and cell identifiers", "[mcstudy]") {
    DgpSpec spec;
    spec.rho = 1.0;
    CHECK_THROWS_AS(validate(spec), Error);
    spec.rho = 0.3;
    spec.T = 20;
    CHECK_THROWS_AS(validate(spec), Error);
    DgpSpec a, b;
    b.delta = 2.0;
    CHECK(cell_id(a) == cell_id(b));
    b.psi = 0.3;
    CHECK(cell_id(a) != cell_id(b));
    CHECK(table1_cells(100).size() == 8);
    CHECK(study_variants().size() == 4);
}

TEST_CASE("K policy parsing", "[mcstudy]") {
    CHECK(parse_k_policies("auto") == std::vector<KPolicy>{KPolicy{}});
    CHECK(parse_k_policies("8") == std::vector<KPolicy>{KPolicy{8}});
    const auto grid = parse_k_policies("2:8:2");
    REQUIRE(grid.size() == 4);
    CHECK(grid.back().K == 8u);
    CHECK(parse_k_policies("auto,4").size() == 2);
    CHECK(KPolicy{}.label() == "auto");
    CHECK(KPolicy{6}.label() == "6");
    CHECK_THROWS_AS(parse_k_policies("x"), Error);
    CHECK_THROWS_AS(parse_k_policies("8:2:2"), Error);
}

TEST_CASE("size results do not depend on the worker count", "[mcstudy]") {
    DgpSpec cell;
    cell.rho = 0.3;
    const std::vector<Variant> variants{Variant::ChisqFourier, Variant::NonstandardFourier, Variant::FTransformed};
    const std::vector<KPolicy> policies{KPolicy{}, KPolicy{6}};
    chowtest::TestEngine e1, e3;
    const auto a = size_experiment({cell}, variants, policies, quick(1), e1);
    const auto b = size_experiment({cell}, variants, policies, quick(3), e3);
    REQUIRE(a.size() == 6);
    std::ostringstream sa, sb;
    write_size_csv(sa, a);
    write_size_csv(sb, b);
    CHECK(sa.str() == sb.str());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].decisions == b[i].decisions);
    CHECK(sa.str().rfind("T,rho,psi,variant,k_policy,rejection,mc_se,ave_k,reps,failures\n", 0) == 0);
    for (const auto& r : a) {
        CHECK(r.reps == 500);
        CHECK(r.rejection >= 0.0);
        CHECK(r.rejection <= 0.35);
        CHECK(r.mc_se == Approx(std::sqrt(r.rejection * (1 - r.rejection) / (r.reps - r.failures))));
    }
}

TEST_CASE("size-adjusted power at zero break equals the level and paired tests agree", "[mcstudy]") {
    DgpSpec base;
    base.rho = 0.3;
    chowtest::TestEngine engine;
    const auto res = power_experiment(base, {0.0, 0.5}, study_variants(), KPolicy{}, quick(), engine);
    CHECK(res.pairs_identical);
    REQUIRE(res.points.size() == 8);
    for (const auto& pt : res.points) {
        if (pt.delta == 0.0) CHECK(std::abs(pt.power - 0.05) <= 0.012);
        if (pt.delta == 0.5) CHECK(pt.power > 0.1);
    }
    std::ostringstream os;
    write_power_csv(os, res, KPolicy{});
    CHECK(os.str().rfind("delta,variant,k_policy,critical_value,power,mc_se,ave_k,reps,failures\n", 0) == 0);
}

TEST_CASE("a second seed agrees within Monte Carlo error", "[mcstudy]") {
    DgpSpec cell;
    cell.rho = 0.6;
    auto o = quick();
    o.reps = 2000;
    const std::vector<Variant> variants{Variant::ChisqFourier, Variant::FTransformed};
    chowtest::TestEngine engine;
    const auto a = size_experiment({cell}, variants, {KPolicy{}}, o, engine);
    o.seed = 1234;
    const auto b = size_experiment({cell}, variants, {KPolicy{}}, o, engine);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double se = std::hypot(a[i].mc_se, b[i].mc_se);
        CHECK(std::abs(a[i].rejection - b[i].rejection) <= 3.0 * se);
    }
}

TEST_CASE("size-adjusted power rises with the break size", "[mcstudy]") {
    DgpSpec base;
    base.T = 200;
    base.rho = 0.3;
    chowtest::TestEngine engine;
    const std::vector<double> deltas{0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2};
    const auto res = power_experiment(base, deltas, {Variant::FTransformed}, KPolicy{}, quick(), engine);
    REQUIRE(res.points.size() == deltas.size());
    for (std::size_t i = 1; i < res.points.size(); ++i) {
        const auto& lo = res.points[i - 1];
        const auto& hi = res.points[i];
        CHECK(hi.power >= lo.power - 2.0 * std::hypot(lo.mc_se, hi.mc_se));
    }
    CHECK(res.points.back().power > 0.9);
}

TEST_CASE("too few replications are rejected", "[mcstudy]") {
    auto o = quick();
    o.reps = 100;
    chowtest::TestEngine engine;
    CHECK_THROWS_AS(size_experiment(table1_cells(100), study_variants(), {KPolicy{}}, o, engine), Error);
}
