#include "hacchow/fixedlimit.hpp"

#include "hacchow/error.hpp"
#include "hacchow/linalg.hpp"
#include "hacchow/parallel.hpp"
#include "hacchow/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <string>

namespace hacchow::fixedlimit {

namespace {

using numkit::Matrix;
using numkit::Vector;

/// Grid quantities shared by all replications.
struct GridFunctionals {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t k_max = 0;
    double lambda = 0.0;
    Vector phi0;          // phi-tilde_0 scaled by sqrt(lambda (1 - lambda))
    Matrix phi_tilde;     // n x k_max
    Vector norm_prefix;   // norm_prefix[K] = sum_{j<K} (1/n) sum_i phi-tilde_j(r_i)^2
};

GridFunctionals build_grid(const LimitSpec& spec, std::size_t k_max) {
    GridFunctionals g;
    g.n = spec.grid;
    g.p = spec.p;
    g.k_max = k_max;
    g.lambda = spec.lambda;
    const bases::BasisSet basis = bases::make_basis(spec.family, spec.grid, k_max, spec.lambda);
    g.phi_tilde = bases::phi_tilde_matrix(basis.matrix, spec.lambda);
    g.phi0 = bases::phi_tilde_zero(spec.grid, spec.lambda);
    const double s = std::sqrt(spec.lambda * (1.0 - spec.lambda));
    for (double& v : g.phi0) v *= s;
    const Vector norms = bases::phi_tilde_column_norms(basis);
    g.norm_prefix.assign(k_max + 1, 0.0);
    for (std::size_t j = 0; j < k_max; ++j) g.norm_prefix[j + 1] = g.norm_prefix[j] + norms[j];
    return g;
}

/// eta_0 (p) and eta_1..eta_kmax (k_max x p, row-major) for one draw of normals.
struct Etas {
    Vector eta0;
    Vector eta;  // k_max * p
};

void draw_etas(const GridFunctionals& g, std::uint64_t seed, std::uint64_t rep, std::uint64_t attempt,
               Vector& normals, Etas& out) {
    numkit::RngStream rng(seed, numkit::derive_stream(rep, attempt));
    normals.resize(g.n * g.p);
    rng.fill_normals(normals);
    out.eta0.assign(g.p, 0.0);
    out.eta.assign(g.k_max * g.p, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(g.n));
    for (std::size_t i = 0; i < g.n; ++i) {
        const double* e = normals.data() + i * g.p;
        const auto phi_row = g.phi_tilde.row(i);
        for (std::size_t c = 0; c < g.p; ++c) out.eta0[c] += g.phi0[i] * e[c];
        for (std::size_t j = 0; j < g.k_max; ++j) {
            const double w = phi_row[j];
            double* dst = out.eta.data() + j * g.p;
            for (std::size_t c = 0; c < g.p; ++c) dst[c] += w * e[c];
        }
    }
    for (double& v : out.eta0) v *= scale;
    for (double& v : out.eta) v *= scale;
}

/// x' W^{-1} x through an in-place Cholesky; nullopt when W fails the SPD pivot test.
std::optional<double> quad_form_inverse(const Vector& w_in, const Vector& x, std::size_t p, Vector& scratch) {
    scratch = w_in;
    double max_diag = 0.0;
    for (std::size_t i = 0; i < p; ++i) max_diag = std::max(max_diag, scratch[i * p + i]);
    const double threshold = numkit::kSpdTolerance * max_diag;
    // Lower factor L with W = L L', stored in the lower triangle.
    for (std::size_t j = 0; j < p; ++j) {
        double d = scratch[j * p + j];
        for (std::size_t k = 0; k < j; ++k) d -= scratch[j * p + k] * scratch[j * p + k];
        if (!(d > threshold)) return std::nullopt;
        d = std::sqrt(d);
        scratch[j * p + j] = d;
        for (std::size_t i = j + 1; i < p; ++i) {
            double v = scratch[i * p + j];
            for (std::size_t k = 0; k < j; ++k) v -= scratch[i * p + k] * scratch[j * p + k];
            scratch[i * p + j] = v / d;
        }
    }
    double q = 0.0;
    Vector y(p);
    for (std::size_t i = 0; i < p; ++i) {
        double v = x[i];
        for (std::size_t k = 0; k < i; ++k) v -= scratch[i * p + k] * y[k];
        y[i] = v / scratch[i * p + i];
        q += y[i] * y[i];
    }
    return q;
}

/// Statistic of `kind` for basis count K given the accumulated sum of eta_j eta_j'.
std::optional<double> statistic(const GridFunctionals& g, LimitKind kind, std::size_t K, const Vector& eta0,
                                const Vector& wsum, Vector& w, Vector& scratch) {
    const std::size_t p = g.p;
    w.resize(p * p);
    for (std::size_t i = 0; i < p * p; ++i) w[i] = wsum[i] / static_cast<double>(K);
    const double lam = g.lambda * (1.0 - g.lambda);
    const double nf = g.norm_prefix[K] / static_cast<double>(K);
    if (kind == LimitKind::TStarInf) {
        if (!(w[0] > 0.0)) return std::nullopt;
        return std::sqrt(nf) * eta0[0] / std::sqrt(w[0]);
    }
    const auto q = quad_form_inverse(w, eta0, p, scratch);
    if (!q) return std::nullopt;
    switch (kind) {
        case LimitKind::FInf: return *q / lam;
        case LimitKind::FStarInf: return *q * nf;
        case LimitKind::ScaledFInf:
            return *q * static_cast<double>(K - p + 1) / static_cast<double>(K * p);
        case LimitKind::TStarInf: break;
    }
    return std::nullopt;
}

/// Statistic for one replication and one K, redrawing with the next attempt on singular W.
double redraw_statistic(const GridFunctionals& g, LimitKind kind, std::size_t K, std::uint64_t seed,
                        std::uint64_t rep, std::size_t& redraws) {
    Vector normals;
    Etas etas;
    Vector wsum;
    Vector w;
    Vector scratch;
    const std::size_t p = g.p;
    for (std::uint64_t attempt = 1; attempt <= 100; ++attempt) {
        ++redraws;
        draw_etas(g, seed, rep, attempt, normals, etas);
        wsum.assign(p * p, 0.0);
        for (std::size_t j = 0; j < K; ++j) {
            const double* e = etas.eta.data() + j * p;
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = 0; b < p; ++b) wsum[a * p + b] += e[a] * e[b];
        }
        if (auto s = statistic(g, kind, K, etas.eta0, wsum, w, scratch)) return *s;
    }
    throw Error(ErrorCode::SimulationFailure, "weighting matrix stayed singular after 100 redraws");
}

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t read_uint(std::istream& is, int bytes) {
    unsigned char b[8] = {};
    if (!is.read(reinterpret_cast<char*>(b), bytes)) throw Error(ErrorCode::IoError, "truncated cache file");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

std::string_view kind_name(LimitKind kind) noexcept {
    switch (kind) {
        case LimitKind::FInf: return "F_inf";
        case LimitKind::FStarInf: return "F_star_inf";
        case LimitKind::TStarInf: return "t_star_inf";
        case LimitKind::ScaledFInf: return "scaled_F_inf";
    }
    return "unknown";
}

std::optional<LimitKind> parse_kind(std::string_view name) noexcept {
    for (auto k : {LimitKind::FInf, LimitKind::FStarInf, LimitKind::TStarInf, LimitKind::ScaledFInf})
        if (kind_name(k) == name) return k;
    return std::nullopt;
}

void validate(const LimitSpec& spec) {
    if (spec.grid < 100) throw Error(ErrorCode::DomainError, "simulation grid must have at least 100 points");
    if (spec.reps < 1000) throw Error(ErrorCode::DomainError, "at least 1000 replications are required");
    if (spec.p < 1) throw Error(ErrorCode::DomainError, "p must be positive");
    if (spec.K < 1 || spec.K + 2 > spec.grid) throw Error(ErrorCode::DomainError, "K must lie in [1, grid - 2]");
    (void)bases::KernelMatrix(spec.grid, spec.lambda);
}

std::vector<SimulatedDistribution> simulate_limit_range(const LimitSpec& spec_in, LimitKind kind, std::size_t k_lo,
                                                        std::size_t k_hi, unsigned workers) {
    LimitSpec spec = spec_in;
    spec.K = k_hi;
    validate(spec);
    if (k_lo < 1 || k_lo > k_hi) throw Error(ErrorCode::DomainError, "empty K range");
    if (kind == LimitKind::TStarInf && spec.p != 1) throw Error(ErrorCode::DomainError, "t_star_inf requires p = 1");
    if (kind == LimitKind::ScaledFInf && k_lo < spec.p) throw Error(ErrorCode::KTooSmall, "scaled_F_inf needs K >= p");

    const GridFunctionals g = build_grid(spec, k_hi);
    const std::size_t nk = k_hi - k_lo + 1;
    const std::size_t reps = spec.reps;
    const std::size_t p = spec.p;
    // values[r * nk + i]: draw for K = k_lo + i; NaN marks a singular weighting matrix.
    std::vector<double> values(reps * nk);

    parallel_for(reps, workers, [&](std::size_t r) {
        Vector normals;
        Etas etas;
        Vector wsum(p * p, 0.0);
        Vector w;
        Vector scratch;
        draw_etas(g, spec.seed, r, 0, normals, etas);
        for (std::size_t K = 1; K <= k_hi; ++K) {
            const double* e = etas.eta.data() + (K - 1) * p;
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = 0; b < p; ++b) wsum[a * p + b] += e[a] * e[b];
            if (K < k_lo) continue;
            const auto s = statistic(g, kind, K, etas.eta0, wsum, w, scratch);
            values[r * nk + (K - k_lo)] = s ? *s : std::numeric_limits<double>::quiet_NaN();
        }
    });

    std::vector<SimulatedDistribution> out(nk);
    for (std::size_t i = 0; i < nk; ++i) {
        auto& d = out[i];
        d.spec = spec;
        d.spec.K = k_lo + i;
        d.kind = kind;
        d.draws.resize(reps);
        for (std::size_t r = 0; r < reps; ++r) {
            double v = values[r * nk + i];
            if (std::isnan(v)) v = redraw_statistic(g, kind, d.spec.K, spec.seed, r, d.redraws);
            d.draws[r] = v;
        }
        if (static_cast<double>(d.redraws) > 0.001 * static_cast<double>(reps)) {
            throw Error(ErrorCode::SimulationFailure,
                        "singular weighting matrix in " + std::to_string(d.redraws) + " of " + std::to_string(reps) +
                            " replications at K = " + std::to_string(d.spec.K));
        }
        std::sort(d.draws.begin(), d.draws.end());
    }
    return out;
}

SimulatedDistribution simulate_limit(const LimitSpec& spec, LimitKind kind, unsigned workers) {
    auto range = simulate_limit_range(spec, kind, spec.K, spec.K, workers);
    return std::move(range.front());
}

double critical_value(const SimulatedDistribution& dist, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::DomainError, "alpha must lie in (0,1)");
    const auto& d = dist.draws;
    if (d.empty()) throw Error(ErrorCode::DomainError, "empty distribution");
    const double pos = static_cast<double>(d.size()) * (1.0 - alpha);
    auto idx = static_cast<std::size_t>(std::ceil(pos - 1e-9));
    idx = std::clamp<std::size_t>(idx, 1, d.size());
    return d[idx - 1];
}

double empirical_p(const SimulatedDistribution& dist, double x) {
    const auto& d = dist.draws;
    const auto at_least = static_cast<double>(d.end() - std::lower_bound(d.begin(), d.end(), x));
    return (at_least + 1.0) / (static_cast<double>(d.size()) + 1.0);
}

namespace {

SimulatedDistribution absolute(const SimulatedDistribution& dist) {
    SimulatedDistribution a = dist;
    for (double& v : a.draws) v = std::abs(v);
    std::sort(a.draws.begin(), a.draws.end());
    return a;
}

}  // namespace

double critical_value_two_sided(const SimulatedDistribution& dist, double alpha) {
    return critical_value(absolute(dist), alpha);
}

double empirical_p_two_sided(const SimulatedDistribution& dist, double x) {
    return empirical_p(absolute(dist), std::abs(x));
}

void write_distribution(const std::filesystem::path& path, const SimulatedDistribution& dist) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    os.write("HCCV", 4);
    write_u32(os, kCacheVersion);
    write_u32(os, static_cast<std::uint32_t>(dist.kind));
    write_u32(os, static_cast<std::uint32_t>(dist.spec.p));
    write_u32(os, static_cast<std::uint32_t>(dist.spec.K));
    write_f64(os, dist.spec.lambda);
    write_u32(os, static_cast<std::uint32_t>(dist.spec.family));
    write_u32(os, static_cast<std::uint32_t>(dist.spec.grid));
    write_u64(os, dist.spec.reps);
    write_u64(os, dist.spec.seed);
    write_u64(os, dist.redraws);
    write_u64(os, dist.draws.size());
    for (double v : dist.draws) write_f64(os, v);
    if (!os) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

SimulatedDistribution read_distribution(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "HCCV", 4) != 0) {
        throw Error(ErrorCode::IoError, "bad cache file header in " + path.string());
    }
    if (read_uint(is, 4) != kCacheVersion) throw Error(ErrorCode::IoError, "unsupported cache version");
    SimulatedDistribution d;
    d.kind = static_cast<LimitKind>(read_uint(is, 4));
    d.spec.p = read_uint(is, 4);
    d.spec.K = read_uint(is, 4);
    d.spec.lambda = std::bit_cast<double>(read_uint(is, 8));
    d.spec.family = static_cast<bases::BasisFamily>(read_uint(is, 4));
    d.spec.grid = read_uint(is, 4);
    d.spec.reps = read_uint(is, 8);
    d.spec.seed = read_uint(is, 8);
    d.redraws = read_uint(is, 8);
    const std::uint64_t count = read_uint(is, 8);
    d.draws.resize(count);
    for (auto& v : d.draws) v = std::bit_cast<double>(read_uint(is, 8));
    return d;
}

void export_csv(const std::filesystem::path& path, const SimulatedDistribution& dist) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    os << "# kind=" << kind_name(dist.kind) << " p=" << dist.spec.p << " K=" << dist.spec.K
       << " lambda=" << dist.spec.lambda << " family=" << bases::family_name(dist.spec.family)
       << " grid=" << dist.spec.grid << " reps=" << dist.spec.reps << " seed=" << dist.spec.seed << '\n';
    os << "draw\n";
    char buf[32];
    for (double v : dist.draws) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf << '\n';
    }
}

CvCache::CvCache(std::optional<std::filesystem::path> directory, unsigned workers)
    : directory_(std::move(directory)), workers_(workers) {}

CvCache::Key CvCache::key_of(const LimitSpec& spec, LimitKind kind) {
    return {static_cast<int>(kind), spec.p, spec.K, std::llround(spec.lambda * 1e6), static_cast<int>(spec.family),
            spec.grid, spec.reps, spec.seed};
}

std::filesystem::path CvCache::file_for(const LimitSpec& spec, LimitKind kind) const {
    char name[256];
    std::snprintf(name, sizeof name, "cv_%s_%s_p%zu_K%zu_lam%lld_n%zu_r%zu_s%llu.bin",
                  std::string(kind_name(kind)).c_str(), std::string(bases::family_name(spec.family)).c_str(), spec.p,
                  spec.K, std::llround(spec.lambda * 1e6), spec.grid, spec.reps,
                  static_cast<unsigned long long>(spec.seed));
    return directory_.value_or(".") / name;
}

std::shared_ptr<const SimulatedDistribution> CvCache::lookup(const Key& key, const LimitSpec& spec, LimitKind kind) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    if (directory_) {
        const auto path = file_for(spec, kind);
        if (std::filesystem::exists(path)) {
            auto d = std::make_shared<const SimulatedDistribution>(read_distribution(path));
            std::lock_guard lock(mutex_);
            return entries_.try_emplace(key, std::move(d)).first->second;
        }
    }
    return nullptr;
}

void CvCache::store(const Key& key, SimulatedDistribution dist) {
    if (directory_) {
        std::filesystem::create_directories(*directory_);
        const auto path = file_for(dist.spec, dist.kind);
        auto tmp = path;
        tmp += ".tmp";
        write_distribution(tmp, dist);
        std::filesystem::rename(tmp, path);
    }
    std::lock_guard lock(mutex_);
    entries_.try_emplace(key, std::make_shared<const SimulatedDistribution>(std::move(dist)));
}

std::shared_ptr<const SimulatedDistribution> CvCache::get(const LimitSpec& spec, LimitKind kind) {
    const Key key = key_of(spec, kind);
    if (auto hit = lookup(key, spec, kind)) return hit;
    store(key, simulate_limit(spec, kind, workers_));
    return lookup(key, spec, kind);
}

void CvCache::prewarm(const LimitSpec& spec, LimitKind kind, std::size_t k_lo, std::size_t k_hi) {
    bool missing = false;
    for (std::size_t K = k_lo; K <= k_hi && !missing; ++K) {
        LimitSpec s = spec;
        s.K = K;
        missing = lookup(key_of(s, kind), s, kind) == nullptr;
    }
    if (!missing) return;
    for (auto& d : simulate_limit_range(spec, kind, k_lo, k_hi, workers_)) {
        const Key key = key_of(d.spec, kind);
        if (lookup(key, d.spec, kind) == nullptr) store(key, std::move(d));
    }
}

}  // namespace hacchow::fixedlimit
