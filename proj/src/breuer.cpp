#include "chaoslab/breuer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "chaoslab/parallel.hpp"

namespace chaoslab {

void BreuerMajorSpec::validate() const {
    if (!(H > 0 && H < 0.5)) throw std::invalid_argument("breuer: H must lie in (0, 1/2)");
    if (orders.empty()) throw std::invalid_argument("breuer: need at least one order");
    for (int q : orders)
        if (q < 2 || q > 6) throw std::invalid_argument("breuer: orders must be in 2..6");
    if (!(step > 0)) throw std::invalid_argument("breuer: step must be positive");
    if (points() < 2) throw std::invalid_argument("breuer: need T >= 2");
    if (points() > 2048) throw std::invalid_argument("breuer: T/step <= 2048 (dense factorization)");
}

int BreuerMajorSpec::points() const { return static_cast<int>(std::llround(T / step)); }

double breuer_rho(double H, double t) {
    t = std::abs(t);
    const double h2 = 2 * H;
    if (t < 2) return 0.5 * (std::pow(t + 1, h2) + std::pow(std::abs(t - 1), h2) - 2 * std::pow(t, h2));
    // t^{2H} [(1+1/t)^{2H} + (1-1/t)^{2H} - 2] / 2 without the cancellation
    const double a = std::expm1(h2 * std::log1p(1 / t)), b = std::expm1(h2 * std::log1p(-1 / t));
    return 0.5 * std::pow(t, h2) * (a + b);
}

namespace {

Mat gram(const BreuerMajorSpec& spec) {
    const int n = spec.points();
    std::vector<double> r(n);
    for (int k = 0; k < n; ++k) r[k] = breuer_rho(spec.H, k);
    Mat G(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) G(a, b) = r[std::abs(a - b)];
    return G;
}

}  // namespace

BreuerBuild breuer_build(const BreuerMajorSpec& spec) {
    spec.validate();
    const int n = spec.points();
    GramBasis basis(gram(spec));
    std::vector<SymKernel> ks;
    for (int q : spec.orders) {
        checked_size(q, n, "Breuer-Major kernel");
        Kernel diag(q, n);
        const double v = 1 / std::sqrt(static_cast<double>(n));
        for (int u = 0; u < n; ++u) diag.at(std::vector<int>(q, u)) = v;
        ks.push_back(to_orthonormal(diag, basis));
    }
    return {ChaosVector::from_kernels(ks), std::move(basis)};
}

Mat breuer_covariance(const BreuerMajorSpec& spec) {
    spec.validate();
    const int n = spec.points(), d = static_cast<int>(spec.orders.size());
    Mat C = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (spec.orders[i] != spec.orders[j]) continue;
            const int q = spec.orders[i];
            double s = 0;
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v) s += std::pow(breuer_rho(spec.H, u - v), q);
            C(i, j) = factorial(q) * s / n;
        }
    return C;
}

Mat breuer_limit_covariance(const BreuerMajorSpec& spec) {
    spec.validate();
    const int d = static_cast<int>(spec.orders.size());
    Mat C = Mat::Zero(d, d);
    constexpr long K = 1000000;
    const double c = spec.H * (2 * spec.H - 1);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (spec.orders[i] != spec.orders[j]) continue;
            const int q = spec.orders[i];
            double s = 0;
            for (long k = K; k >= 1; --k) s += std::pow(breuer_rho(spec.H, static_cast<double>(k)), q);
            // rho(k) ~ c k^{2H-2}; tail sum_{k>K} by the midpoint integral
            const double p = q * (2 * spec.H - 2) + 1;
            const double tail = std::pow(c, q) * std::pow(K + 0.5, p) / -p;
            C(i, j) = factorial(q) * (1 + 2 * (s + tail));
        }
    return C;
}

void breuer_pathwise(const BreuerMajorSpec& spec, const Mat& L, const double* xi, double* out) {
    const int n = spec.points();
    Eigen::Map<const Vec> x(xi, n);
    const Vec X = L.triangularView<Eigen::Lower>() * x;
    const double norm = 1 / std::sqrt(static_cast<double>(n));
    int qmax = 0;
    for (int q : spec.orders) qmax = std::max(qmax, q);
    std::vector<double> he(qmax + 1);
    for (std::size_t i = 0; i < spec.orders.size(); ++i) out[i] = 0;
    for (int u = 0; u < n; ++u) {
        hermite_he_all(X(u), qmax, he.data());
        for (std::size_t i = 0; i < spec.orders.size(); ++i) out[i] += he[spec.orders[i]];
    }
    for (std::size_t i = 0; i < spec.orders.size(); ++i) out[i] *= norm;
}

BreuerReport breuer_experiment(const BreuerMajorSpec& base, const std::vector<int>& horizons, const TestFunction& g,
                               const MCConfig& mc) {
    const int d = static_cast<int>(base.orders.size());
    if (g.d != d) throw std::invalid_argument("breuer_experiment: test function dimension mismatch");
    if (horizons.empty()) throw std::invalid_argument("breuer_experiment: no horizons");
    BreuerReport rep;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        BreuerMajorSpec spec = base;
        spec.T = horizons[h];
        spec.validate();
        const BreuerBuild b = breuer_build(spec);
        BreuerScale s;
        s.T = spec.T;
        s.limit = breuer_limit_covariance(spec);
        const GaussianSpec Z(s.limit);
        DiscrepancyReport dr = discrepancy(b.F, Z);
        s.covariance = dr.covariance;
        s.delta_gamma = dr.delta_gamma;
        s.delta_c = dr.delta_c;
        s.phi = dr.phi;
        s.cumulants = CumulantSet(d, 3);
        for (int o = 1; o <= 3; ++o)
            for (const auto& a : multi_indices(d, o))
                s.cumulants.set(a, o == 1 ? 0.0 : joint_cumulant(b.F, a));
        s.egz = gaussian_expectation(g, MultiIndex::zero(d), Z);
        s.e3 = edgeworth3(s.cumulants, Z, g);

        RateRow row;
        row.scale = spec.T;
        row.delta_gamma = s.delta_gamma;
        row.delta_c = s.delta_c;
        row.phi = s.phi;
        if (mc.samples > 0) {
            MCConfig cfg = mc;
            cfg.seed = splitmix64(mc.seed + static_cast<std::uint64_t>(spec.T));
            const int n = spec.points();
            const Mat& L = b.basis.whitener();
            constexpr int kBlock = 128;
            StatAccumulator acc = run_mc(cfg, 1, [&](std::mt19937_64& rng, std::uint64_t count, StatAccumulator& a) {
                std::normal_distribution<double> nd;
                Mat xi(n, kBlock), X;
                Vec F(d);
                std::vector<double> he;
                int qmax = 0;
                for (int q : spec.orders) qmax = std::max(qmax, q);
                he.resize(qmax + 1);
                const double norm = 1 / std::sqrt(static_cast<double>(n));
                for (std::uint64_t done = 0; done < count;) {
                    const int m = static_cast<int>(std::min<std::uint64_t>(kBlock, count - done));
                    for (int c = 0; c < m; ++c)
                        for (int u = 0; u < n; ++u) xi(u, c) = nd(rng);
                    X.noalias() = L.triangularView<Eigen::Lower>() * xi.leftCols(m);
                    for (int c = 0; c < m; ++c) {
                        F.setZero();
                        for (int u = 0; u < n; ++u) {
                            hermite_he_all(X(u, c), qmax, he.data());
                            for (int i = 0; i < d; ++i) F(i) += he[spec.orders[i]];
                        }
                        F *= norm;
                        const double v = g(F);
                        a.add(&v);
                    }
                    done += m;
                }
            });
            s.mean_g = {acc.mean()(0), acc.se(0)};
            row.raw_gap = s.mean_g.mean - s.egz;
            row.raw_gap_se = s.mean_g.se;
            row.corrected_gap = s.mean_g.mean - s.e3;
            row.corrected_gap_se = s.mean_g.se;
        } else {
            row.raw_gap = row.raw_gap_se = row.corrected_gap = row.corrected_gap_se =
                std::numeric_limits<double>::quiet_NaN();
        }
        rep.table.rows.push_back(row);
        rep.scales.push_back(std::move(s));
    }
    rep.table.sort();
    return rep;
}

}  // namespace chaoslab
