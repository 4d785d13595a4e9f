#include "chaoslab/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "chaoslab/parallel.hpp"

namespace chaoslab {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CHAOSLAB_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 chunk_rng(std::uint64_t seed, std::uint64_t chunk) {
    std::seed_seq seq{splitmix64(seed), splitmix64(seed ^ splitmix64(chunk + 1)), chunk};
    return std::mt19937_64(seq);
}

StatAccumulator::StatAccumulator(int k) : k_(k), mean_(Vec::Zero(k)), m2_(Mat::Zero(k, k)), delta_(k) {}

void StatAccumulator::add(const double* x) {
    ++n_;
    const double inv = 1.0 / static_cast<double>(n_);
    for (int i = 0; i < k_; ++i) delta_(i) = x[i] - mean_(i);
    mean_ += delta_ * inv;
    // m2 += delta (x - mean_new)^T
    for (int j = 0; j < k_; ++j) {
        const double after = x[j] - mean_(j);
        for (int i = 0; i < k_; ++i) m2_(i, j) += delta_(i) * after;
    }
}

void StatAccumulator::merge(const StatAccumulator& o) {
    if (o.k_ != k_) throw std::invalid_argument("StatAccumulator::merge: width mismatch");
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_), n = na + nb;
    Vec d = o.mean_ - mean_;
    m2_ += o.m2_ + d * d.transpose() * (na * nb / n);
    mean_ += d * (nb / n);
    n_ += o.n_;
}

Mat StatAccumulator::covariance() const {
    if (n_ < 2) return Mat::Zero(k_, k_);
    return m2_ / static_cast<double>(n_ - 1);
}

double StatAccumulator::se(int i) const {
    if (n_ < 2) return 0.0;
    return std::sqrt(std::max(0.0, m2_(i, i)) / (static_cast<double>(n_ - 1) * n_));
}

double StatAccumulator::se_of(const Vec& w) const {
    if (n_ < 2) return 0.0;
    double v = w.dot(m2_ * w) / (static_cast<double>(n_ - 1) * n_);
    return std::sqrt(std::max(0.0, v));
}

namespace {

// Samples are drawn in fixed streams of kStream; `chunk` only sets how many streams a task takes,
// so neither the chunk size nor the thread count can change the sample sequence.
constexpr std::uint64_t kStream = 1024;

struct Layout {
    std::uint64_t streams, per_task, tasks;
};

Layout layout(const MCConfig& cfg) {
    if (cfg.chunk == 0) throw std::invalid_argument("MCConfig.chunk must be positive");
    Layout l;
    l.streams = (cfg.samples + kStream - 1) / kStream;
    l.per_task = std::max<std::uint64_t>(1, (cfg.chunk + kStream - 1) / kStream);
    l.tasks = (l.streams + l.per_task - 1) / l.per_task;
    return l;
}

}  // namespace

StatAccumulator run_mc(const MCConfig& cfg, int k, const ChunkFn& chunk_fn) {
    const Layout l = layout(cfg);
    std::vector<StatAccumulator> parts(l.streams, StatAccumulator(k));
    parallel_for(l.tasks, cfg.threads, [&](std::size_t t) {
        for (std::uint64_t c = t * l.per_task; c < std::min(l.streams, (t + 1) * l.per_task); ++c) {
            auto rng = chunk_rng(cfg.seed, c);
            chunk_fn(rng, std::min(kStream, cfg.samples - c * kStream), parts[c]);
        }
    });
    StatAccumulator total(k);
    for (const auto& p : parts) total.merge(p);
    return total;
}

StatAccumulator run_mc_gaussian(const MCConfig& cfg, int dim, int k, const SampleFn& sample_fn) {
    return run_mc(cfg, k, [&](std::mt19937_64& rng, std::uint64_t count, StatAccumulator& acc) {
        std::normal_distribution<double> nd;
        std::vector<double> xi(dim), out(k);
        for (std::uint64_t s = 0; s < count; ++s) {
            for (auto& v : xi) v = nd(rng);
            sample_fn(xi.data(), out.data());
            acc.add(out.data());
        }
    });
}

Mat collect_mc_gaussian(const MCConfig& cfg, int dim, int k, const SampleFn& sample_fn) {
    const Layout l = layout(cfg);
    Mat rows(cfg.samples, k);
    parallel_for(l.tasks, cfg.threads, [&](std::size_t t) {
        std::vector<double> xi(dim), out(k);
        for (std::uint64_t c = t * l.per_task; c < std::min(l.streams, (t + 1) * l.per_task); ++c) {
            auto rng = chunk_rng(cfg.seed, c);
            std::normal_distribution<double> nd;
            const std::uint64_t first = c * kStream, count = std::min(kStream, cfg.samples - first);
            for (std::uint64_t s = 0; s < count; ++s) {
                for (auto& v : xi) v = nd(rng);
                sample_fn(xi.data(), out.data());
                for (int j = 0; j < k; ++j) rows(first + s, j) = out[j];
            }
        }
    });
    return rows;
}

Estimate estimate_expectation(const ChaosVector& F, const TestFunction& g, const MCConfig& mc) {
    if (F.d() != g.d) throw std::invalid_argument("estimate_expectation: dimension mismatch");
    std::vector<ChaosEvaluator> ev;
    for (const auto& c : F.components) ev.emplace_back(c);
    const int d = F.d();
    StatAccumulator acc = run_mc_gaussian(mc, F.dim, 1, [&](const double* xi, double* out) {
        Vec x(d);
        for (int i = 0; i < d; ++i) x(i) = ev[i](xi);
        out[0] = g(x);
    });
    return {acc.mean()(0), acc.se(0)};
}

SteinCheck stein_identity_check(const ChaosVector& F, const TestFunction& g, const GaussianSpec& C,
                                const MCConfig& mc, const UOptions& opt) {
    const int d = F.d();
    if (g.d != d || C.d() != d) throw std::invalid_argument("stein_identity_check: dimension mismatch");
    std::vector<ChaosEvaluator> ev, gam;
    for (const auto& c : F.components) ev.emplace_back(c);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            gam.emplace_back(gamma_ij(F, i, j));
            pairs.emplace_back(i, j);
        }
    const double ez = gaussian_expectation(g, MultiIndex::zero(d), C, opt.gh_nodes);
    const int s = stein_sign();
    StatAccumulator acc = run_mc_gaussian(mc, F.dim, 2, [&](const double* xi, double* out) {
        Vec x(d);
        for (int i = 0; i < d; ++i) x(i) = ev[i](xi);
        out[0] = g(x) - ez;
        double r = 0.0;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            auto [i, j] = pairs[p];
            MultiIndex a = MultiIndex::unit(d, i) + MultiIndex::unit(d, j);
            r += u_transform(g, C, x, a, opt) * (gam[p](xi) - C.cov()(i, j));
        }
        // <C - Gamma, Hess U> on the right side of the Stein equation carries the calibrated sign
        out[1] = -s * r;
    });
    SteinCheck out;
    out.lhs = {acc.mean()(0), acc.se(0)};
    out.rhs = {acc.mean()(1), acc.se(1)};
    Vec w(2);
    w << 1.0, -1.0;
    out.paired_se = acc.se_of(w);
    out.combined_se = std::hypot(out.lhs.se, out.rhs.se);
    return out;
}

void RateTable::sort() {
    std::stable_sort(rows.begin(), rows.end(), [](const RateRow& a, const RateRow& b) { return a.scale < b.scale; });
}

std::string RateTable::to_csv() const {
    std::string out = "scale,delta_gamma,delta_c,phi,raw_gap,raw_gap_se,corrected_gap,corrected_gap_se\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e\n", r.scale, r.delta_gamma,
                      r.delta_c, r.phi, r.raw_gap, r.raw_gap_se, r.corrected_gap, r.corrected_gap_se);
        out += buf;
    }
    return out;
}

RateTable RateTable::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("scale,", 0) != 0) throw std::runtime_error("rate table: bad header");
    RateTable t;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        RateRow r;
        double* f[] = {&r.scale, &r.delta_gamma, &r.delta_c, &r.phi, &r.raw_gap, &r.raw_gap_se, &r.corrected_gap,
                       &r.corrected_gap_se};
        std::istringstream ls(line);
        std::string cell;
        int n = 0;
        while (std::getline(ls, cell, ',')) {
            if (n >= 8) throw std::runtime_error("rate table: too many columns");
            *f[n++] = std::stod(cell);
        }
        if (n != 8) throw std::runtime_error("rate table: expected 8 columns, got " + std::to_string(n));
        t.rows.push_back(r);
    }
    return t;
}

Slope rate_fit(const std::vector<double>& scale, const std::vector<double>& value) {
    if (scale.size() != value.size()) throw std::invalid_argument("rate_fit: size mismatch");
    const std::size_t n = scale.size();
    if (n < 4) throw std::invalid_argument("rate_fit: need at least four points");
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(scale[i] > 0) || !(value[i] > 0)) throw std::domain_error("rate_fit: nonpositive value");
        x[i] = std::log(scale[i]);
        y[i] = std::log(value[i]);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
    if (sxx <= 0) throw std::domain_error("rate_fit: scales are all equal");
    Slope s;
    s.slope = sxy / sxx;
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = y[i] - my - s.slope * (x[i] - mx);
        rss += e * e;
    }
    s.se = std::sqrt(rss / (n - 2) / sxx);
    return s;
}

Slope rate_fit(const RateTable& t, double RateRow::*column) {
    std::vector<double> x, y;
    for (const auto& r : t.rows) {
        x.push_back(r.scale);
        y.push_back(std::abs(r.*column));
    }
    return rate_fit(x, y);
}

}  // namespace chaoslab
