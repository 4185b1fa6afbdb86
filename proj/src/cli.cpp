#include "hacchow/cli.hpp"

#include "hacchow/error.hpp"
#include "hacchow/fixedlimit.hpp"
#include "hacchow/mcstudy.hpp"
#include "hacchow/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace hacchow::cli {

namespace {

using chowtest::Variant;
using nlohmann::json;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::DomainError, "cannot parse '" + std::string(s) + "' as a number in " + std::string(what));
    }
    return v;
}

std::optional<std::string> cache_dir_from(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kCacheEnv); env && *env) return std::string(env);
    return std::nullopt;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    for (auto item : split(text, ',')) {
        if (item.empty()) continue;
        const auto parts = split(item, ':');
        if (parts.size() == 1) {
            out.push_back(parse_double(parts[0], "list"));
        } else if (parts.size() == 3) {
            const double lo = parse_double(parts[0], "range");
            const double hi = parse_double(parts[1], "range");
            const double step = parse_double(parts[2], "range");
            if (!(step > 0.0) || hi < lo) throw Error(ErrorCode::DomainError, "empty range " + std::string(item));
            const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
            for (long i = 0; i <= n; ++i) out.push_back(std::round((lo + i * step) * 1e12) / 1e12);
        } else {
            throw Error(ErrorCode::DomainError, "ranges are written lo:hi:step");
        }
    }
    return out;
}

std::vector<Variant> parse_variants(const std::vector<std::string>& names) {
    std::vector<Variant> out;
    for (const auto& n : names) {
        const auto v = chowtest::parse_variant(n);
        if (!v) throw Error(ErrorCode::DomainError, "unknown variant '" + n + "'");
        out.push_back(*v);
    }
    return out;
}

bases::BasisFamily parse_family(const std::string& name) {
    if (name == bases::family_name(bases::BasisFamily::FourierRaw)) return bases::BasisFamily::FourierRaw;
    if (name == bases::family_name(bases::BasisFamily::FourierTransformed)) return bases::BasisFamily::FourierTransformed;
    throw Error(ErrorCode::DomainError, "unknown basis family '" + name + "'");
}

/// Writes to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& body) {
    if (path.empty() || path == "-") {
        body(out);
        return;
    }
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::IoError, "cannot write " + path);
    body(os);
    if (!os) throw Error(ErrorCode::IoError, "write failed for " + path);
}

json envelope(std::string_view command, json config) {
    return json{{"schema", kReportSchema}, {"version", kVersion}, {"command", command}, {"config", std::move(config)}};
}

json plugin_json(const autok::AutoKResult& a) {
    return json{{"K", a.choice.K},
                {"k_star", std::isfinite(a.choice.k_star) ? json(a.choice.k_star) : json("inf")},
                {"k_min", a.choice.k_min},
                {"k_max", a.choice.k_max},
                {"a_hat", matrix_json(a.model.a_hat)},
                {"sigma_hat", matrix_json(a.model.sigma_hat)},
                {"gamma0", matrix_json(a.model.gamma0)},
                {"omega_v", matrix_json(a.model.omega_v)},
                {"b_hat", matrix_json(a.model.b_hat)},
                {"spectral_radius", a.model.spectral_radius},
                {"clamped", a.model.clamped}};
}

// ---------------------------------------------------------------- test

struct TestArgs {
    std::string data;
    std::string y;
    std::vector<std::string> x;
    std::vector<std::string> z;
    std::vector<std::string> restrict_to;
    double lambda = 0.5;
    std::string k = "auto";
    std::string variant = "f-transformed";
    double alpha = 0.05;
    std::size_t cv_grid = 1000;
    std::size_t cv_reps = 10000;
    std::uint64_t cv_seed = 20240101;
    unsigned workers = 1;
    std::string cache_dir;
    std::string format = "text";
    std::string json_path;
};

void add_test(CLI::App& app, TestArgs& a) {
    app.add_option("--data", a.data, "CSV file with a header row")->required();
    app.add_option("--y", a.y, "dependent variable column")->required();
    app.add_option("--x", a.x, "regressors whose coefficients may break")->required()->delimiter(',');
    app.add_option("--z", a.z, "regressors with stable coefficients")->delimiter(',');
    app.add_option("--restrict", a.restrict_to, "subset of --x columns to test (default: all)")->delimiter(',');
    app.add_option("--lambda", a.lambda, "break fraction in (0,1)")->required();
    app.add_option("--k", a.k, "number of basis functions, or 'auto'");
    app.add_option("--variant", a.variant, "test variant")->capture_default_str();
    app.add_option("--alpha", a.alpha, "nominal level")->capture_default_str();
    app.add_option("--cv-grid", a.cv_grid, "grid size of simulated references")->capture_default_str();
    app.add_option("--cv-reps", a.cv_reps, "replications of simulated references")->capture_default_str();
    app.add_option("--cv-seed", a.cv_seed, "seed of simulated references")->capture_default_str();
    app.add_option("--workers", a.workers, "threads for reference simulation (0 = all cores)");
    app.add_option("--cache-dir", a.cache_dir, std::string("critical-value cache directory (default $") + kCacheEnv + ")");
    app.add_option("--format", a.format, "stdout format")->check(CLI::IsMember({"text", "json"}));
    app.add_option("--json", a.json_path, "also write the JSON report here");
}

json test_config(const TestArgs& a, const std::optional<std::string>& cache) {
    return json{{"data", a.data},       {"y", a.y},
                {"x", a.x},             {"z", a.z},
                {"restrict", a.restrict_to.empty() ? a.x : a.restrict_to},
                {"lambda", a.lambda},   {"k", a.k},
                {"variant", a.variant}, {"alpha", a.alpha},
                {"cv_grid", a.cv_grid}, {"cv_reps", a.cv_reps},
                {"cv_seed", a.cv_seed}, {"workers", a.workers},
                {"cache_dir", cache ? json(*cache) : json(nullptr)}};
}

int cmd_test(const TestArgs& a, std::ostream& out) {
    const auto variant = chowtest::parse_variant(a.variant);
    if (!variant) throw Error(ErrorCode::DomainError, "unknown variant '" + a.variant + "'");
    chowtest::TestOptions opts;
    opts.variant = *variant;
    opts.alpha = a.alpha;
    opts.limit_grid = a.cv_grid;
    opts.limit_reps = a.cv_reps;
    opts.limit_seed = a.cv_seed;
    if (a.k != "auto") {
        const double k = parse_double(a.k, "--k");
        if (!(k >= 1.0) || k != std::floor(k)) throw Error(ErrorCode::DomainError, "--k must be a positive integer or auto");
        opts.K = static_cast<std::size_t>(k);
    }

    std::set<std::string> seen{a.y};
    for (const auto& c : a.x)
        if (!seen.insert(c).second) throw Error(ErrorCode::DomainError, "column '" + c + "' is used twice");
    for (const auto& c : a.z)
        if (!seen.insert(c).second) throw Error(ErrorCode::DomainError, "column '" + c + "' is used twice");

    const CsvTable table = read_csv_file(a.data);
    regression::RegressionData data;
    data.lambda = a.lambda;
    data.y = table.column(a.y);
    const std::size_t T = table.rows();
    data.x = numkit::Matrix(T, a.x.size());
    data.z = numkit::Matrix(T, a.z.size());
    for (std::size_t j = 0; j < a.x.size(); ++j) data.x.set_col(j, table.column(a.x[j]));
    for (std::size_t j = 0; j < a.z.size(); ++j) data.z.set_col(j, table.column(a.z[j]));

    regression::BreakHypothesis hyp = regression::BreakHypothesis::all_coefficients(a.x.size());
    if (!a.restrict_to.empty()) {
        hyp.r_small = numkit::Matrix(a.restrict_to.size(), a.x.size());
        for (std::size_t i = 0; i < a.restrict_to.size(); ++i) {
            const auto it = std::find(a.x.begin(), a.x.end(), a.restrict_to[i]);
            if (it == a.x.end()) throw Error(ErrorCode::DomainError, "--restrict column '" + a.restrict_to[i] + "' is not in --x");
            hyp.r_small(i, static_cast<std::size_t>(it - a.x.begin())) = 1.0;
        }
    }

    const auto cache = cache_dir_from(a.cache_dir);
    chowtest::TestEngine engine(std::make_shared<fixedlimit::CvCache>(
        cache ? std::optional<std::filesystem::path>(*cache) : std::nullopt, a.workers));
    const chowtest::TestReport rep = engine.run(data, hyp, opts);

    json doc = envelope("test", test_config(a, cache));
    doc["result"] = report_json(rep);
    if (!a.json_path.empty()) emit(a.json_path, out, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
    if (a.format == "json") {
        out << doc.dump(2) << '\n';
        return kOk;
    }
    char line[160];
    out << "variant            " << chowtest::variant_name(rep.variant) << '\n';
    out << "reference          " << rep.reference_detail << '\n';
    std::snprintf(line, sizeof line, "T / p / K / lambda %zu / %zu / %zu%s / %g\n", rep.T, rep.p, rep.K,
                  rep.autok ? " (data-driven)" : "", rep.lambda);
    out << line;
    std::snprintf(line, sizeof line, "raw statistic      %.6f\nmodified           %.6f\nscaled             %.6f\n",
                  rep.statistic_raw, rep.statistic_modified, rep.statistic_scaled);
    out << line;
    std::snprintf(line, sizeof line, "test statistic     %.6f\ncritical value     %.6f (alpha = %g)\np-value            %.6f\n",
                  rep.test_statistic, rep.critical_value, rep.alpha, rep.p_value);
    out << line;
    out << "decision           " << (rep.reject ? "reject" : "do not reject") << " H0: no break\n";
    if (rep.autok && rep.autok->model.clamped) out << "note               VAR(1) coefficient rescaled for stability\n";
    return kOk;
}

// ---------------------------------------------------------------- simulate-cv

struct CvArgs {
    std::string kind = "F_star_inf";
    std::string family = "fourier-raw";
    std::size_t p = 1;
    std::size_t k = 8;
    double lambda = 0.4;
    std::size_t grid = 1000;
    std::size_t reps = 10000;
    std::uint64_t seed = 20240101;
    unsigned workers = 1;
    std::string cache_dir;
    std::string csv_path;
    std::size_t compare_grid = 0;
    std::string json_path;
};

void add_cv(CLI::App& app, CvArgs& a) {
    app.add_option("--kind", a.kind, "F_inf, F_star_inf, t_star_inf or scaled_F_inf")->capture_default_str();
    app.add_option("--family", a.family, "fourier-raw or fourier-transformed")->capture_default_str();
    app.add_option("--p", a.p, "number of restrictions")->capture_default_str();
    app.add_option("--k", a.k, "number of basis functions")->capture_default_str();
    app.add_option("--lambda", a.lambda, "break fraction")->capture_default_str();
    app.add_option("--grid", a.grid, "Brownian motion grid size")->capture_default_str();
    app.add_option("--reps", a.reps, "replications")->capture_default_str();
    app.add_option("--seed", a.seed, "seed")->capture_default_str();
    app.add_option("--workers", a.workers, "threads (0 = all cores)");
    app.add_option("--cache-dir", a.cache_dir, "cache directory (default $HACCHOW_CACHE_DIR, else ./hacchow-cache)");
    app.add_option("--csv", a.csv_path, "export the sorted draws as CSV");
    app.add_option("--compare-grid", a.compare_grid, "also simulate on this grid size and report the differences");
    app.add_option("--json", a.json_path, "write a JSON summary here");
}

int cmd_simulate_cv(const CvArgs& a, std::ostream& out) {
    const auto kind = fixedlimit::parse_kind(a.kind);
    if (!kind) throw Error(ErrorCode::DomainError, "unknown kind '" + a.kind + "'");
    fixedlimit::LimitSpec spec;
    spec.p = a.p;
    spec.K = a.k;
    spec.lambda = a.lambda;
    spec.family = parse_family(a.family);
    spec.grid = a.grid;
    spec.reps = a.reps;
    spec.seed = a.seed;
    fixedlimit::validate(spec);

    const std::filesystem::path dir = cache_dir_from(a.cache_dir).value_or("hacchow-cache");
    fixedlimit::CvCache cache(dir, a.workers);
    const auto dist = cache.get(spec, *kind);
    const bool signed_draws = *kind == fixedlimit::LimitKind::TStarInf;
    auto quantile = [&](const fixedlimit::SimulatedDistribution& d, double alpha) {
        return signed_draws ? fixedlimit::critical_value_two_sided(d, alpha) : fixedlimit::critical_value(d, alpha);
    };

    std::optional<fixedlimit::SimulatedDistribution> other;
    if (a.compare_grid) {
        fixedlimit::LimitSpec s2 = spec;
        s2.grid = a.compare_grid;
        other = fixedlimit::simulate_limit(s2, *kind, a.workers);
    }
    const bool has_f_reference =
        *kind == fixedlimit::LimitKind::ScaledFInf && spec.family == bases::BasisFamily::FourierTransformed;
    const auto f_ref = numkit::DistFamily::fisher_f(static_cast<double>(spec.p), static_cast<double>(spec.K - spec.p + 1));

    json rows = json::array();
    out << "kind " << fixedlimit::kind_name(*kind) << ", family " << a.family << ", p=" << spec.p << ", K=" << spec.K
        << ", lambda=" << spec.lambda << ", grid=" << spec.grid << ", reps=" << spec.reps << ", seed=" << spec.seed
        << ", redraws=" << dist->redraws << '\n';
    out << "cache " << cache.file_for(spec, *kind).string() << '\n';
    out << "alpha   quantile" << (has_f_reference ? "    F-quantile  rel.diff" : "")
        << (other ? "    grid-" + std::to_string(a.compare_grid) + "  diff" : "") << '\n';
    for (double alpha : {0.10, 0.05, 0.01}) {
        const double q = quantile(*dist, alpha);
        json row{{"alpha", alpha}, {"quantile", q}};
        char buf[200];
        int n = std::snprintf(buf, sizeof buf, "%-7.2f %-11.5f", alpha, q);
        if (has_f_reference) {
            const double fq = numkit::dist_quantile(f_ref, 1.0 - alpha);
            row["f_quantile"] = fq;
            row["relative_difference"] = q / fq - 1.0;
            n += std::snprintf(buf + n, sizeof buf - n, " %-11.5f %+.4f", fq, q / fq - 1.0);
        }
        if (other) {
            const double q2 = quantile(*other, alpha);
            row["compare_quantile"] = q2;
            row["compare_difference"] = q2 - q;
            n += std::snprintf(buf + n, sizeof buf - n, " %-11.5f %+.5f", q2, q2 - q);
        }
        out << buf << '\n';
        rows.push_back(std::move(row));
    }
    if (!a.csv_path.empty()) fixedlimit::export_csv(a.csv_path, *dist);
    if (!a.json_path.empty()) {
        json doc = envelope("simulate-cv", json{{"kind", a.kind},
                                                {"family", a.family},
                                                {"p", a.p},
                                                {"k", a.k},
                                                {"lambda", a.lambda},
                                                {"grid", a.grid},
                                                {"reps", a.reps},
                                                {"seed", a.seed},
                                                {"compare_grid", a.compare_grid},
                                                {"cache_dir", dir.string()}});
        doc["result"] = json{{"quantiles", rows},
                             {"redraws", dist->redraws},
                             {"cache_file", cache.file_for(spec, *kind).string()}};
        emit(a.json_path, out, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
    }
    return kOk;
}

// ---------------------------------------------------------------- mc-size / mc-power

struct McArgs {
    std::string preset = "table1";
    std::string T = "100";
    std::string rho = "0";
    std::string psi = "0";
    std::string k;
    std::vector<std::string> variants;
    std::string cells;
    std::size_t reps = 2000;
    bool paper_reps = false;
    std::uint64_t seed = 20240101;
    double alpha = 0.05;
    double lambda = 0.4;
    std::size_t burn_in = 500;
    unsigned workers = 1;
    std::size_t cv_grid = 1000;
    std::size_t cv_reps = 10000;
    std::uint64_t cv_seed = 20240101;
    std::string cache_dir;
    std::string output;
    std::string json_path;
    std::string deltas = "0:1.2:0.2";
};

void add_mc_common(CLI::App& app, McArgs& a) {
    app.add_option("--T", a.T, "sample size(s), comma separated")->capture_default_str();
    app.add_option("--k", a.k, "K policy: auto, an integer, lo:hi:step or a comma list");
    app.add_option("--variants", a.variants, "variants (default: the four F-type tests)")->delimiter(',');
    app.add_option("--reps", a.reps, "replications per cell")->capture_default_str();
    app.add_flag("--paper-reps", a.paper_reps, "use 10000 replications per cell");
    app.add_option("--seed", a.seed, "master seed")->capture_default_str();
    app.add_option("--alpha", a.alpha, "nominal level")->capture_default_str();
    app.add_option("--lambda", a.lambda, "break fraction")->capture_default_str();
    app.add_option("--burn-in", a.burn_in, "discarded initial draws")->capture_default_str();
    app.add_option("--workers", a.workers, "threads (0 = all cores)");
    app.add_option("--cv-grid", a.cv_grid, "grid size of simulated references")->capture_default_str();
    app.add_option("--cv-reps", a.cv_reps, "replications of simulated references")->capture_default_str();
    app.add_option("--cv-seed", a.cv_seed, "seed of simulated references")->capture_default_str();
    app.add_option("--cache-dir", a.cache_dir, "critical-value cache directory (default $HACCHOW_CACHE_DIR)");
    app.add_option("--output", a.output, "CSV output path (default stdout)");
    app.add_option("--json", a.json_path, "write a JSON run summary here");
}

mcstudy::StudyOptions study_options(const McArgs& a) {
    mcstudy::StudyOptions o;
    o.reps = a.paper_reps ? 10000 : a.reps;
    o.seed = a.seed;
    o.alpha = a.alpha;
    o.workers = a.workers;
    o.test.limit_grid = a.cv_grid;
    o.test.limit_reps = a.cv_reps;
    o.test.limit_seed = a.cv_seed;
    return o;
}

json mc_config(const McArgs& a, const mcstudy::StudyOptions& o, const std::vector<Variant>& variants,
               const std::string& k, const std::optional<std::string>& cache) {
    json names = json::array();
    for (Variant v : variants) names.push_back(chowtest::variant_name(v));
    return json{{"preset", a.preset}, {"T", a.T},           {"rho", a.rho},         {"psi", a.psi},
                {"k", k},             {"variants", names},  {"cells", a.cells},     {"reps", o.reps},
                {"seed", a.seed},     {"alpha", a.alpha},   {"lambda", a.lambda},   {"burn_in", a.burn_in},
                {"cv_grid", a.cv_grid}, {"cv_reps", a.cv_reps}, {"cv_seed", a.cv_seed}, {"deltas", a.deltas},
                {"rng", numkit::RngStream::kAlgorithm}, {"cache_dir", cache ? json(*cache) : json(nullptr)}};
}

std::shared_ptr<fixedlimit::CvCache> make_cache(const std::optional<std::string>& dir, unsigned workers) {
    return std::make_shared<fixedlimit::CvCache>(dir ? std::optional<std::filesystem::path>(*dir) : std::nullopt,
                                                 workers);
}

int cmd_mc_size(const McArgs& a, bool cells_given, std::ostream& out) {
    std::vector<mcstudy::DgpSpec> cells;
    std::string k = a.k;
    for (double t : parse_grid(a.T)) {
        if (!(t >= 1.0) || t != std::floor(t)) throw Error(ErrorCode::DomainError, "--T must be a positive integer");
        const auto T = static_cast<std::size_t>(t);
        if (a.preset == "table1" || a.preset == "figure") {
            for (auto c : mcstudy::table1_cells(T)) cells.push_back(c);
        } else {
            for (double rho : parse_grid(a.rho))
                for (double psi : parse_grid(a.psi)) cells.push_back({T, rho, psi});
        }
    }
    if (k.empty()) k = a.preset == "figure" ? "2:20:2" : "auto";
    if (cells_given) {
        std::vector<mcstudy::DgpSpec> chosen;
        for (double idx : parse_grid(a.cells)) {
            if (idx < 1.0 || idx > static_cast<double>(cells.size()) || idx != std::floor(idx)) {
                throw Error(ErrorCode::DomainError, "--cells index out of range 1.." + std::to_string(cells.size()));
            }
            chosen.push_back(cells[static_cast<std::size_t>(idx) - 1]);
        }
        if (chosen.empty()) throw Error(ErrorCode::DomainError, "--cells selects no cell");
        cells = std::move(chosen);
    }
    for (auto& c : cells) {
        c.lambda = a.lambda;
        c.burn_in = a.burn_in;
    }
    const auto variants = a.variants.empty() ? mcstudy::study_variants() : parse_variants(a.variants);
    const auto policies = mcstudy::parse_k_policies(k);
    const auto options = study_options(a);
    const auto cache = cache_dir_from(a.cache_dir);
    chowtest::TestEngine engine(make_cache(cache, a.workers));

    const auto results = mcstudy::size_experiment(cells, variants, policies, options, engine);
    emit(a.output, out, [&](std::ostream& os) { mcstudy::write_size_csv(os, results); });
    if (!a.json_path.empty()) {
        json doc = envelope("mc-size", mc_config(a, options, variants, k, cache));
        json rows = json::array();
        for (const auto& r : results) {
            rows.push_back(json{{"T", r.dgp.T},
                                {"rho", r.dgp.rho},
                                {"psi", r.dgp.psi},
                                {"variant", chowtest::variant_name(r.variant)},
                                {"k_policy", r.policy.label()},
                                {"rejection", r.rejection},
                                {"mc_se", r.mc_se},
                                {"ave_k", r.ave_k},
                                {"reps", r.reps},
                                {"failures", r.failures}});
        }
        doc["result"] = rows;
        emit(a.json_path, out, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
    }
    return kOk;
}

int cmd_mc_power(const McArgs& a, std::ostream& out) {
    const auto Ts = parse_grid(a.T);
    const auto rhos = parse_grid(a.rho);
    const auto psis = parse_grid(a.psi);
    if (Ts.size() != 1 || rhos.size() != 1 || psis.size() != 1) {
        throw Error(ErrorCode::DomainError, "mc-power takes a single T, rho and psi");
    }
    mcstudy::DgpSpec base;
    base.T = static_cast<std::size_t>(Ts[0]);
    base.rho = rhos[0];
    base.psi = psis[0];
    base.lambda = a.lambda;
    base.burn_in = a.burn_in;
    const std::string k = a.k.empty() ? "auto" : a.k;
    const auto policies = mcstudy::parse_k_policies(k);
    if (policies.size() != 1) throw Error(ErrorCode::DomainError, "mc-power takes a single K policy");
    const auto deltas = parse_grid(a.deltas);
    if (deltas.empty()) throw Error(ErrorCode::DomainError, "--deltas is empty");
    const auto variants = a.variants.empty() ? mcstudy::study_variants() : parse_variants(a.variants);
    const auto options = study_options(a);
    const auto cache = cache_dir_from(a.cache_dir);
    chowtest::TestEngine engine(make_cache(cache, a.workers));

    const auto result = mcstudy::power_experiment(base, deltas, variants, policies[0], options, engine);
    emit(a.output, out, [&](std::ostream& os) { mcstudy::write_power_csv(os, result, policies[0]); });
    if (!a.json_path.empty()) {
        json doc = envelope("mc-power", mc_config(a, options, variants, k, cache));
        json rows = json::array();
        for (const auto& p : result.points) {
            rows.push_back(json{{"delta", p.delta},
                                {"variant", chowtest::variant_name(p.variant)},
                                {"critical_value", p.critical_value},
                                {"power", p.power},
                                {"mc_se", p.mc_se},
                                {"ave_k", p.ave_k},
                                {"failures", p.failures}});
        }
        doc["result"] = json{{"points", rows}, {"pairs_identical", result.pairs_identical}};
        emit(a.json_path, out, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
    }
    return kOk;
}

int report_error(const Error& e, std::ostream& err) {
    err << "error: " << e.what() << '\n';
    if (e.code() == ErrorCode::IoError) return kIo;
    return is_validation_error(e.code()) ? kUsage : kNumerical;
}

}  // namespace

const std::vector<double>& CsvTable::column(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == name) return columns[j];
    throw Error(ErrorCode::DomainError, "no column named '" + std::string(name) + "'");
}

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::DomainError, "CSV input is empty");
    std::set<std::string> names;
    for (auto h : split(line, ',')) {
        if (h.empty()) throw Error(ErrorCode::DomainError, "CSV header has an empty column name");
        if (!names.insert(std::string(h)).second) {
            throw Error(ErrorCode::DomainError, "duplicate CSV column '" + std::string(h) + "'");
        }
        table.header.emplace_back(h);
    }
    table.columns.resize(table.header.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != table.header.size()) {
            throw Error(ErrorCode::DomainError, "CSV row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                                    " fields, expected " + std::to_string(table.header.size()));
        }
        for (std::size_t j = 0; j < cells.size(); ++j)
            table.columns[j].push_back(parse_double(cells[j], "CSV row " + std::to_string(row)));
    }
    return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return read_csv(in);
}

json matrix_json(const numkit::Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return rows;
}

json report_json(const chowtest::TestReport& r) {
    json j{{"variant", chowtest::variant_name(r.variant)},
           {"reference", chowtest::reference_name(r.reference)},
           {"reference_detail", r.reference_detail},
           {"T", r.T},
           {"p", r.p},
           {"K", r.K},
           {"k_policy", r.autok ? "auto" : "fixed"},
           {"lambda", r.lambda},
           {"statistic_raw", r.statistic_raw},
           {"statistic_modified", r.statistic_modified},
           {"statistic_scaled", r.statistic_scaled},
           {"test_statistic", r.test_statistic},
           {"norm_factor", r.norm_factor},
           {"alpha", r.alpha},
           {"p_value", r.p_value},
           {"critical_value", r.critical_value},
           {"reject", r.reject},
           {"beta_hat", r.beta_hat},
           {"omega_hat", matrix_json(r.omega_hat)},
           {"sandwich", matrix_json(r.sandwich)}};
    j["alternate_p_value"] = r.alternate_p_value ? json(*r.alternate_p_value) : json(nullptr);
    j["autok"] = r.autok ? plugin_json(*r.autok) : json(nullptr);
    return j;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"HAR-robust Chow tests with series long-run variance estimators"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    TestArgs test_args;
    add_test(*app.add_subcommand("test", "test for a coefficient break at a known date"), test_args);
    CvArgs cv_args;
    add_cv(*app.add_subcommand("simulate-cv", "simulate a fixed-K limiting distribution"), cv_args);
    McArgs size_args;
    auto* size_cmd = app.add_subcommand("mc-size", "null rejection frequencies");
    size_cmd->add_option("--preset", size_args.preset, "table1, figure or custom")
        ->check(CLI::IsMember({"table1", "figure", "custom"}))
        ->capture_default_str();
    size_cmd->add_option("--rho", size_args.rho, "AR parameter(s) for the custom preset")->capture_default_str();
    size_cmd->add_option("--psi", size_args.psi, "MA parameter(s) for the custom preset")->capture_default_str();
    auto* cells_opt = size_cmd->add_option("--cells", size_args.cells, "1-based indices of the cells to run");
    add_mc_common(*size_cmd, size_args);
    McArgs power_args;
    power_args.T = "200";
    power_args.rho = "0.6";
    auto* power_cmd = app.add_subcommand("mc-power", "size-adjusted power curves");
    power_cmd->add_option("--rho", power_args.rho, "AR parameter")->capture_default_str();
    power_cmd->add_option("--psi", power_args.psi, "MA parameter")->capture_default_str();
    power_cmd->add_option("--deltas", power_args.deltas, "break sizes, lo:hi:step or a list")->capture_default_str();
    add_mc_common(*power_cmd, power_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (app.got_subcommand("test")) return cmd_test(test_args, out);
        if (app.got_subcommand("simulate-cv")) return cmd_simulate_cv(cv_args, out);
        if (app.got_subcommand("mc-size")) return cmd_mc_size(size_args, cells_opt->count() > 0, out);
        return cmd_mc_power(power_args, out);
    } catch (const Error& e) {
        return report_error(e, err);
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: IoError: " << e.what() << '\n';
        return kIo;
    }
}

}  // namespace hacchow::cli
