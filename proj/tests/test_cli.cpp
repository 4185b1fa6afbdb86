#include <catch2/catch_amalgamated.hpp>

#include "hacchow/cli.hpp"
#include "hacchow/error.hpp"
#include "hacchow/mcstudy.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace hacchow;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome call(std::vector<std::string> args) {
    args.insert(args.begin(), "hacchow");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "hacchow_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Writes an AR(1) design with T = 200 and returns the library view of the same data.
regression::RegressionData write_fixture(const fs::path& file, std::size_t T = 200) {
    mcstudy::DgpSpec spec;
    spec.T = T;
    spec.rho = 0.6;
    const auto d = mcstudy::simulate_dgp(spec, 42, 0);
    std::ofstream os(file);
    os << "y,const,q\n";
    char buf[128];
    for (std::size_t t = 0; t < T; ++t) {
        std::snprintf(buf, sizeof buf, "%.17g,1,%.17g\n", d.y[t], d.x(t, 1));
        os << buf;
    }
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("CSV reader", "[cli]") {
    std::istringstream ok("a, b\n1,2\n3 , -4.5\n\n");
    const auto t = cli::read_csv(ok);
    CHECK(t.rows() == 2);
    CHECK(t.column("b") == std::vector<double>{2.0, -4.5});
    CHECK_THROWS_AS(t.column("c"), Error);
    std::istringstream ragged("a,b\n1\n");
    CHECK_THROWS_AS(cli::read_csv(ragged), Error);
    std::istringstream text("a\nfoo\n");
    CHECK_THROWS_AS(cli::read_csv(text), Error);
    std::istringstream dup("a,a\n1,2\n");
    CHECK_THROWS_AS(cli::read_csv(dup), Error);
    CHECK_THROWS_AS(cli::read_csv_file("/nonexistent/file.csv"), Error);
}

TEST_CASE("test command reproduces the library result", "[cli]") {
    const auto dir = scratch("test_cmd");
    const auto data = write_fixture(dir / "d.csv");
    const auto r = call({"test", "--data", (dir / "d.csv").string(), "--y", "y", "--x", "const,q", "--lambda", "0.4",
                         "--variant", "f-transformed", "--k", "8", "--format", "json"});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["schema"] == cli::kReportSchema);
    CHECK(doc["command"] == "test");
    chowtest::TestOptions o;
    o.K = 8;
    const auto lib = chowtest::run_test(data, regression::BreakHypothesis::all_coefficients(2), o);
    CHECK(doc["result"]["test_statistic"].get<double>() == lib.test_statistic);
    CHECK(doc["result"]["p_value"].get<double>() == lib.p_value);
    CHECK(doc["result"]["reject"].get<bool>() == lib.reject);
    CHECK(doc["result"]["reference_detail"] == "fisher-F(2,7)");

    const auto text = call({"test", "--data", (dir / "d.csv").string(), "--y", "y", "--x", "const,q", "--lambda", "0.4",
                            "--k", "8"});
    CHECK(text.code == 0);
    CHECK(text.out.find("decision") != std::string::npos);
}

TEST_CASE("test command with data-driven K matches the selection rule", "[cli]") {
    const auto dir = scratch("auto_k");
    const auto data = write_fixture(dir / "d.csv");
    const auto r = call({"test", "--data", (dir / "d.csv").string(), "--y", "y", "--x", "const,q", "--lambda", "0.4",
                         "--k", "auto", "--format", "json", "--json", (dir / "r.json").string()});
    REQUIRE(r.code == 0);
    chowtest::TestEngine engine;
    const auto prep = engine.prepare(data, regression::BreakHypothesis::all_coefficients(2));
    const auto k = engine.auto_k(prep).choice.K;
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["result"]["K"] == k);
    CHECK(doc["result"]["k_policy"] == "auto");
    CHECK(doc["result"]["autok"]["K"] == k);
    CHECK(nlohmann::json::parse(slurp(dir / "r.json")) == doc);
}

TEST_CASE("test command exit codes", "[cli]") {
    const auto dir = scratch("codes");
    write_fixture(dir / "d.csv", 100);
    const auto d = (dir / "d.csv").string();
    const auto extreme = call({"test", "--data", d, "--y", "y", "--x", "const,q", "--lambda", "0.99"});
    CHECK(extreme.code == 2);
    CHECK(extreme.err.find("RegimeTooSmall") != std::string::npos);
    CHECK(call({"test", "--data", d, "--y", "y", "--x", "const,q", "--z", "q", "--lambda", "0.4"}).code == 2);
    CHECK(call({"test", "--data", d, "--y", "y", "--x", "const,q", "--lambda", "0.4", "--variant", "x"}).code == 2);
    CHECK(call({"test", "--data", d, "--y", "y", "--x", "const,q", "--lambda", "0.4", "--k", "1"}).code == 2);
    CHECK(call({"test", "--data", (dir / "missing.csv").string(), "--y", "y", "--x", "q", "--lambda", "0.4"}).code == 4);
    CHECK(call({"test", "--y", "y"}).code == 2);
    CHECK(call({"bogus"}).code == 2);
    CHECK(call({"--version"}).code == 0);
}

TEST_CASE("simulate-cv writes a cache file that is stable across runs", "[cli]") {
    const auto dir = scratch("cv");
    const std::vector<std::string> args{"simulate-cv", "--kind", "F_star_inf", "--p", "1", "--k", "6", "--grid", "200",
                                        "--reps", "1000", "--cache-dir", dir.string(), "--csv",
                                        (dir / "draws.csv").string(), "--json", (dir / "cv.json").string()};
    const auto first = call(args);
    REQUIRE(first.code == 0);
    std::vector<fs::path> bins;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".bin") bins.push_back(e.path());
    REQUIRE(bins.size() == 1);
    const std::string bytes = slurp(bins[0]);
    fs::remove(bins[0]);
    const auto second = call(args);
    REQUIRE(second.code == 0);
    CHECK(slurp(bins[0]) == bytes);
    CHECK(first.out == second.out);
    CHECK(count_lines(slurp(dir / "draws.csv")) == 1002);
    const auto doc = nlohmann::json::parse(slurp(dir / "cv.json"));
    CHECK(doc["result"]["quantiles"].size() == 3);

    const auto f = call({"simulate-cv", "--kind", "scaled_F_inf", "--family", "fourier-transformed", "--p", "2", "--k",
                         "8", "--grid", "200", "--reps", "1000", "--cache-dir", dir.string()});
    CHECK(f.code == 0);
    CHECK(f.out.find("F-quantile") != std::string::npos);

    std::ofstream(dir / "plain") << "x";
    const auto blocked = call({"simulate-cv", "--grid", "200", "--reps", "1000", "--cache-dir",
                               (dir / "plain" / "sub").string()});
    CHECK(blocked.code == 4);
    CHECK(call({"simulate-cv", "--kind", "nope"}).code == 2);
    CHECK(call({"simulate-cv", "--grid", "10"}).code == 2);
}

TEST_CASE("simulate-cv reports a grid-convergence diagnostic", "[cli]") {
    const auto dir = scratch("grid");
    const auto r = call({"simulate-cv", "--kind", "scaled_F_inf", "--family", "fourier-transformed", "--p", "2", "--k",
                         "8", "--grid", "100", "--compare-grid", "1000", "--reps", "4000", "--cache-dir", dir.string(),
                         "--json", (dir / "cv.json").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("grid-1000") != std::string::npos);
    const auto doc = nlohmann::json::parse(slurp(dir / "cv.json"));
    for (const auto& row : doc["result"]["quantiles"]) {
        const double q = row["quantile"].get<double>();
        const double q2 = row["compare_quantile"].get<double>();
        CHECK(row["compare_difference"].get<double>() == Catch::Approx(q2 - q));
        // independent draws on each grid: the gap is Monte Carlo noise, a few percent at 4000 reps
        CHECK(std::abs(q2 - q) <= 0.25 * q);
    }
}

TEST_CASE("mc-size table1 preset covers the eight designs of a sample size", "[cli]") {
    const auto r = call({"mc-size", "--T", "100", "--reps", "500", "--k", "6", "--variants", "f-transformed"});
    REQUIRE(r.code == 0);
    CHECK(count_lines(r.out) == 9);
    for (const char* design : {"100,0,0,", "100,0.3,0,", "100,0.6,0,", "100,0.9,0,", "100,-0.6,0,", "100,-0.3,0,",
                               "100,0.6,0.6,", "100,0.9,0.9,"})
        CHECK(r.out.find(std::string("\n") + design) != std::string::npos);
}

TEST_CASE("mc-size presets and cell selection", "[cli]") {
    const auto dir = scratch("mc");
    CHECK(call({"mc-size", "--cells", ""}).code == 2);
    CHECK(call({"mc-size", "--cells", "9"}).code == 2);
    CHECK(call({"mc-size", "--preset", "other"}).code == 2);

    const auto one = call({"mc-size", "--cells", "2", "--reps", "500", "--k", "6", "--variants", "f-transformed",
                           "--json", (dir / "s.json").string()});
    REQUIRE(one.code == 0);
    CHECK(count_lines(one.out) == 2);
    CHECK(one.out.find("\n100,0.3,0,f-transformed,6,") != std::string::npos);
    const auto doc = nlohmann::json::parse(slurp(dir / "s.json"));
    CHECK(doc["command"] == "mc-size");
    CHECK(doc["result"].size() == 1);

    const auto figure = call({"mc-size", "--preset", "figure", "--cells", "1", "--reps", "500", "--variants",
                              "chisq-fourier", "--output", (dir / "f.csv").string()});
    REQUIRE(figure.code == 0);
    CHECK(count_lines(slurp(dir / "f.csv")) == 11);

    const auto custom = call({"mc-size", "--preset", "custom", "--rho", "0,0.5", "--psi", "0", "--reps", "500", "--k",
                              "4", "--variants", "chisq-fourier"});
    REQUIRE(custom.code == 0);
    CHECK(count_lines(custom.out) == 3);
}

TEST_CASE("mc-power output", "[cli]") {
    const auto r = call({"mc-power", "--T", "100", "--rho", "0", "--deltas", "0,0.5", "--reps", "500", "--k", "6",
                         "--variants", "chisq-fourier,chisq-transformed"});
    REQUIRE(r.code == 0);
    CHECK(count_lines(r.out) == 5);
    CHECK(call({"mc-power", "--T", "100,200"}).code == 2);
    CHECK(call({"mc-power", "--k", "2:4:2"}).code == 2);
}
