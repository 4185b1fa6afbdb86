#include "hacchow/mcstudy.hpp"

#include "hacchow/error.hpp"
#include "hacchow/parallel.hpp"
#include "hacchow/rng.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <utility>

namespace hacchow::mcstudy {

namespace {

using chowtest::TestReport;
using chowtest::Variant;

struct Slot {
    TestReport report;
    bool ok = false;
};

std::size_t parse_count(std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw Error(ErrorCode::DomainError, "bad K specification '" + std::string(s) + "'");
    }
    return v;
}

/// Statistics for one replication under every (policy, variant); failures leave ok = false.
void evaluate_replication(const regression::RegressionData& data, const std::vector<Variant>& variants,
                          const std::vector<KPolicy>& policies, const chowtest::TestOptions& opts,
                          chowtest::TestEngine& engine, Slot* out) {
    const auto hyp = regression::BreakHypothesis::all_coefficients(data.m());
    chowtest::Prepared prep;
    try {
        prep = engine.prepare(data, hyp);
    } catch (const Error&) {
        return;
    }
    std::optional<std::size_t> auto_k;
    bool auto_failed = false;
    for (std::size_t a = 0; a < policies.size(); ++a) {
        std::size_t K = 0;
        if (policies[a].K) {
            K = *policies[a].K;
        } else {
            if (!auto_k && !auto_failed) {
                try {
                    auto_k = engine.auto_k(prep).choice.K;
                } catch (const Error&) {
                    auto_failed = true;
                }
            }
            if (auto_failed) continue;
            K = *auto_k;
        }
        for (std::size_t v = 0; v < variants.size(); ++v) {
            Slot& slot = out[a * variants.size() + v];
            try {
                slot.report = engine.evaluate(prep, variants[v], K, opts, true);
                slot.report.beta_hat.clear();
                slot.report.omega_hat = {};
                slot.report.sandwich = {};
                slot.ok = true;
            } catch (const Error&) {
                slot.ok = false;
            }
        }
    }
}

/// Simulates every nonstandard reference needed by `slots` in one pass per kind.
void prewarm_references(const std::vector<Slot>& slots, const chowtest::TestOptions& opts,
                        chowtest::TestEngine& engine) {
    std::map<std::tuple<int, std::size_t, long long>, std::pair<std::size_t, std::size_t>> ranges;
    std::map<std::tuple<int, std::size_t, long long>, double> lambdas;
    for (const Slot& s : slots) {
        if (!s.ok || chowtest::info(s.report.variant).reference != chowtest::Reference::Nonstandard) continue;
        const auto key = std::make_tuple(static_cast<int>(chowtest::TestEngine::limit_kind(s.report.variant)),
                                         s.report.p, std::llround(s.report.lambda * 1e6));
        auto [it, fresh] = ranges.try_emplace(key, s.report.K, s.report.K);
        it->second.first = std::min(it->second.first, s.report.K);
        it->second.second = std::max(it->second.second, s.report.K);
        lambdas[key] = s.report.lambda;
    }
    for (const auto& [key, range] : ranges) {
        const auto kind = static_cast<fixedlimit::LimitKind>(std::get<0>(key));
        const auto spec = chowtest::TestEngine::limit_spec(std::get<1>(key), range.first, lambdas[key], opts);
        engine.cv_cache().prewarm(spec, kind, range.first, range.second);
    }
}

double mc_se(double r, std::size_t n) {
    return n == 0 ? 0.0 : std::sqrt(r * (1.0 - r) / static_cast<double>(n));
}

chowtest::TestOptions test_options(const StudyOptions& options) {
    chowtest::TestOptions opts = options.test;
    opts.alpha = options.alpha;
    return opts;
}

void check(const StudyOptions& options) {
    if (options.reps < 500) throw Error(ErrorCode::DomainError, "at least 500 replications are required");
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw Error(ErrorCode::DomainError, "alpha must lie in (0,1)");
}

std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

}  // namespace

void validate(const DgpSpec& spec) {
    if (!std::isfinite(spec.rho) || !(std::abs(spec.rho) < 1.0)) {
        throw Error(ErrorCode::DomainError, "|rho| must be below 1");
    }
    if (!std::isfinite(spec.psi) || !std::isfinite(spec.delta)) {
        throw Error(ErrorCode::DomainError, "psi and delta must be finite");
    }
    if (spec.T < 50) throw Error(ErrorCode::DomainError, "T must be at least 50");
    (void)bases::break_index(spec.T, spec.lambda);
}

std::uint64_t cell_id(const DgpSpec& spec) noexcept {
    std::uint64_t id = numkit::derive_stream(spec.T, std::bit_cast<std::uint64_t>(spec.rho));
    id = numkit::derive_stream(id, std::bit_cast<std::uint64_t>(spec.psi));
    return numkit::derive_stream(id, std::bit_cast<std::uint64_t>(spec.lambda));
}

regression::RegressionData simulate_dgp(const DgpSpec& spec, std::uint64_t seed, std::uint64_t stream) {
    validate(spec);
    numkit::RngStream q_rng(seed, numkit::derive_stream(stream, 1));
    numkit::RngStream u_rng(seed, numkit::derive_stream(stream, 2));
    const std::size_t T = spec.T;
    const std::size_t k = bases::break_index(T, spec.lambda);

    regression::RegressionData data;
    data.lambda = spec.lambda;
    data.y.resize(T);
    data.x = numkit::Matrix(T, 2);
    data.z = numkit::Matrix(T, 0);

    double q = 0.0;
    double u = 0.0;
    double e_prev = 0.0;
    for (std::size_t s = 0; s < spec.burn_in + T; ++s) {
        const double eq = q_rng.normal();
        const double eu = u_rng.normal();
        q = spec.rho * q + eq;
        u = spec.rho * u + eu + spec.psi * e_prev;
        e_prev = eu;
        if (s < spec.burn_in) continue;
        const std::size_t t = s - spec.burn_in;
        data.x(t, 0) = 1.0;
        data.x(t, 1) = q;
        const double shift = t + 1 > k ? spec.delta * (1.0 + q) : 0.0;
        data.y[t] = shift + u;
    }
    return data;
}

std::string KPolicy::label() const { return K ? std::to_string(*K) : "auto"; }

std::vector<KPolicy> parse_k_policies(std::string_view text) {
    std::vector<KPolicy> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const std::string_view item = text.substr(0, comma);
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        if (item == "auto") {
            out.push_back({});
            continue;
        }
        const auto c1 = item.find(':');
        if (c1 == std::string_view::npos) {
            out.push_back({parse_count(item)});
            continue;
        }
        const auto c2 = item.find(':', c1 + 1);
        if (c2 == std::string_view::npos) throw Error(ErrorCode::DomainError, "K range must be lo:hi:step");
        const std::size_t lo = parse_count(item.substr(0, c1));
        const std::size_t hi = parse_count(item.substr(c1 + 1, c2 - c1 - 1));
        const std::size_t step = parse_count(item.substr(c2 + 1));
        if (step == 0 || lo > hi) throw Error(ErrorCode::DomainError, "empty K range");
        for (std::size_t K = lo; K <= hi; K += step) out.push_back({K});
    }
    for (const auto& p : out)
        if (p.K && *p.K == 0) throw Error(ErrorCode::DomainError, "K must be positive");
    if (out.empty()) throw Error(ErrorCode::DomainError, "no K policy given");
    return out;
}

std::vector<CellResult> size_experiment(const std::vector<DgpSpec>& cells, const std::vector<Variant>& variants,
                                        const std::vector<KPolicy>& policies, const StudyOptions& options,
                                        chowtest::TestEngine& engine) {
    check(options);
    if (cells.empty() || variants.empty() || policies.empty()) {
        throw Error(ErrorCode::DomainError, "size experiment needs cells, variants and K policies");
    }
    for (const auto& c : cells) validate(c);
    const chowtest::TestOptions opts = test_options(options);
    const std::size_t width = policies.size() * variants.size();

    std::vector<CellResult> results;
    for (const DgpSpec& cell : cells) {
        const std::uint64_t id = cell_id(cell);
        std::vector<Slot> slots(options.reps * width);
        parallel_for(options.reps, options.workers, [&](std::size_t i) {
            const auto data = simulate_dgp(cell, options.seed, numkit::derive_stream(id, i));
            evaluate_replication(data, variants, policies, opts, engine, slots.data() + i * width);
        });
        prewarm_references(slots, opts, engine);
        parallel_for(slots.size(), options.workers, [&](std::size_t s) {
            if (!slots[s].ok) return;
            try {
                engine.attach_reference(slots[s].report, opts);
            } catch (const Error&) {
                slots[s].ok = false;
            }
        });

        for (std::size_t a = 0; a < policies.size(); ++a) {
            for (std::size_t v = 0; v < variants.size(); ++v) {
                CellResult r;
                r.dgp = cell;
                r.variant = variants[v];
                r.policy = policies[a];
                r.reps = options.reps;
                r.decisions.assign(options.reps, -1);
                std::size_t k_sum = 0;
                for (std::size_t i = 0; i < options.reps; ++i) {
                    const Slot& s = slots[i * width + a * variants.size() + v];
                    if (!s.ok) {
                        ++r.failures;
                        continue;
                    }
                    r.decisions[i] = s.report.reject ? 1 : 0;
                    r.rejections += s.report.reject ? 1 : 0;
                    k_sum += s.report.K;
                }
                const std::size_t ok = r.reps - r.failures;
                r.rejection = ok ? static_cast<double>(r.rejections) / static_cast<double>(ok) : 0.0;
                r.mc_se = mc_se(r.rejection, ok);
                r.ave_k = ok ? static_cast<double>(k_sum) / static_cast<double>(ok) : 0.0;
                results.push_back(std::move(r));
            }
        }
    }
    return results;
}

PowerResult power_experiment(const DgpSpec& base, const std::vector<double>& deltas, const std::vector<Variant>& variants,
                             const KPolicy& policy, const StudyOptions& options, chowtest::TestEngine& engine) {
    check(options);
    if (deltas.empty() || variants.empty()) throw Error(ErrorCode::DomainError, "power experiment needs deltas and variants");
    const chowtest::TestOptions opts = test_options(options);
    const std::vector<KPolicy> policies{policy};
    const std::size_t nv = variants.size();

    auto run = [&](double delta) {
        DgpSpec spec = base;
        spec.delta = delta;
        validate(spec);
        const std::uint64_t id = cell_id(spec);
        std::vector<Slot> slots(options.reps * nv);
        parallel_for(options.reps, options.workers, [&](std::size_t i) {
            const auto data = simulate_dgp(spec, options.seed, numkit::derive_stream(id, i));
            evaluate_replication(data, variants, policies, opts, engine, slots.data() + i * nv);
        });
        return slots;
    };
    auto magnitude = [&](const Slot& s) {
        return chowtest::info(s.report.variant).t_type ? std::abs(s.report.test_statistic) : s.report.test_statistic;
    };

    // Size-adjusted critical values from the null design.
    const std::vector<Slot> null_slots = run(0.0);
    std::vector<double> critical(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        fixedlimit::SimulatedDistribution null_dist;
        for (std::size_t i = 0; i < options.reps; ++i) {
            const Slot& s = null_slots[i * nv + v];
            if (s.ok) null_dist.draws.push_back(magnitude(s));
        }
        if (null_dist.draws.empty()) throw Error(ErrorCode::SimulationFailure, "every null replication failed");
        std::sort(null_dist.draws.begin(), null_dist.draws.end());
        critical[v] = fixedlimit::critical_value(null_dist, options.alpha);
    }

    PowerResult result;
    for (double delta : deltas) {
        const std::vector<Slot> slots = delta == 0.0 ? null_slots : run(delta);
        for (std::size_t v = 0; v < nv; ++v) {
            PowerPoint pt;
            pt.variant = variants[v];
            pt.delta = delta;
            pt.critical_value = critical[v];
            pt.reps = options.reps;
            pt.decisions.assign(options.reps, -1);
            std::size_t hits = 0;
            std::size_t k_sum = 0;
            for (std::size_t i = 0; i < options.reps; ++i) {
                const Slot& s = slots[i * nv + v];
                if (!s.ok) {
                    ++pt.failures;
                    continue;
                }
                const bool reject = magnitude(s) > critical[v];
                pt.decisions[i] = reject ? 1 : 0;
                hits += reject ? 1 : 0;
                k_sum += s.report.K;
            }
            const std::size_t ok = pt.reps - pt.failures;
            pt.power = ok ? static_cast<double>(hits) / static_cast<double>(ok) : 0.0;
            pt.mc_se = mc_se(pt.power, ok);
            pt.ave_k = ok ? static_cast<double>(k_sum) / static_cast<double>(ok) : 0.0;
            result.points.push_back(std::move(pt));
        }
    }

    constexpr std::pair<Variant, Variant> kPairs[] = {
        {Variant::ChisqFourier, Variant::NonstandardFourier},
        {Variant::ChisqTransformed, Variant::FTransformed},
        {Variant::NormalFourier, Variant::NonstandardTFourier},
        {Variant::NormalTransformed, Variant::TTransformed},
    };
    for (const auto& [a, b] : kPairs) {
        for (const auto& pa : result.points) {
            if (pa.variant != a) continue;
            for (const auto& pb : result.points)
                if (pb.variant == b && pb.delta == pa.delta && pb.decisions != pa.decisions) result.pairs_identical = false;
        }
    }
    return result;
}

std::vector<DgpSpec> table1_cells(std::size_t T) {
    constexpr std::pair<double, double> kDesigns[] = {{0.0, 0.0},  {0.3, 0.0},  {0.6, 0.0}, {0.9, 0.0},
                                                      {-0.6, 0.0}, {-0.3, 0.0}, {0.6, 0.6}, {0.9, 0.9}};
    std::vector<DgpSpec> cells;
    for (const auto& [rho, psi] : kDesigns) {
        DgpSpec c;
        c.T = T;
        c.rho = rho;
        c.psi = psi;
        cells.push_back(c);
    }
    return cells;
}

std::vector<Variant> study_variants() {
    return {Variant::ChisqFourier, Variant::NonstandardFourier, Variant::ChisqTransformed, Variant::FTransformed};
}

void write_size_csv(std::ostream& os, const std::vector<CellResult>& results) {
    os << "T,rho,psi,variant,k_policy,rejection,mc_se,ave_k,reps,failures\n";
    char buf[256];
    for (const auto& r : results) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%s,%s,%s,%.4f,%.4f,%.2f,%zu,%zu\n", r.dgp.T,
                      format_number(r.dgp.rho).c_str(), format_number(r.dgp.psi).c_str(),
                      std::string(chowtest::variant_name(r.variant)).c_str(), r.policy.label().c_str(), r.rejection,
                      r.mc_se, r.ave_k, r.reps, r.failures);
        os << buf;
    }
}

void write_power_csv(std::ostream& os, const PowerResult& result, const KPolicy& policy) {
    os << "delta,variant,k_policy,critical_value,power,mc_se,ave_k,reps,failures\n";
    char buf[256];
    for (const auto& p : result.points) {
        std::snprintf(buf, sizeof buf, "%s,%s,%s,%.6f,%.4f,%.4f,%.2f,%zu,%zu\n", format_number(p.delta).c_str(),
                      std::string(chowtest::variant_name(p.variant)).c_str(), policy.label().c_str(),
                      p.critical_value, p.power, p.mc_se, p.ave_k, p.reps, p.failures);
        os << buf;
    }
}

}  // namespace hacchow::mcstudy
