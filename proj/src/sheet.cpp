#include "chaoslab/sheet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <stdexcept>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "chaoslab/parallel.hpp"

namespace chaoslab {

void SheetSpec::validate() const {
    if (l < 1 || l > 2) throw std::invalid_argument("sheet: l must be 1 or 2");
    if (epsilons.empty()) throw std::invalid_argument("sheet: need at least one epsilon");
    for (double e : epsilons)
        if (!(e > 0) || !std::isfinite(e)) throw std::invalid_argument("sheet: epsilons must be positive");
}

double sheet_ctilde(const std::vector<double>& eps) {
    std::vector<int> p(eps.size());
    std::iota(p.begin(), p.end(), 0);
    double total = 0;
    long count = 0;
    do {
        double c = 1, run = 1;
        for (std::size_t j = 0; j + 1 < p.size(); ++j) {
            run += eps[p[j]];
            c /= run;
        }
        total += c;
        ++count;
    } while (std::next_permutation(p.begin(), p.end()));
    return total / count;
}

namespace {

void check_eps(const std::vector<double>& eps) {
    if (eps.empty()) throw std::invalid_argument("sheet_constant: need k >= 1 arguments");
    if (eps.size() > 8) throw std::invalid_argument("sheet_constant: k <= 8");
    for (double e : eps)
        if (!(e > 0)) throw std::invalid_argument("sheet_constant: arguments must be positive");
}

// Sum over the k! simplices s_{p1} < ... < s_{pk}; on each one the cyclic mins are fixed.
double simplex_sum(const std::vector<double>& eps) {
    const int k = static_cast<int>(eps.size());
    std::vector<int> p(k), rank(k);
    std::iota(p.begin(), p.end(), 0);
    double total = 0;
    do {
        for (int t = 0; t < k; ++t) rank[p[t]] = t;
        std::vector<int> e(k, 0);  // edges on which vertex v is the minimum
        for (int v = 0; v < k; ++v) {
            const int w = (v + 1) % k;
            ++e[rank[v] <= rank[w] ? v : w];
        }
        double val = 1, acc = 0;
        for (int t = 0; t < k; ++t) {
            acc += e[p[t]] + eps[p[t]] - 1.0;
            if (!(acc > 0)) throw std::domain_error("sheet_constant: divergent simplex integral");
            val /= acc;
        }
        total += val;
    } while (std::next_permutation(p.begin(), p.end()));
    return total;
}

// The integrand is homogeneous of degree sum(eps) - k, so with rho = max s_i the radial part
// integrates to 1/sum(eps) and what is left is a sum over the k faces {s_m = 1}, each done by
// nested tanh-sinh split at the kinks s_i = s_j. Long double keeps values near the singular
// corner in range; nodes stay 1e-300 from the ends, dropping a relative ~1e-300^eps of mass.
double nested_quadrature(const std::vector<double>& eps) {
    const int k = static_cast<int>(eps.size());
    if (k > 3) throw std::invalid_argument("sheet_constant: quadrature mode needs k <= 3 (use Simplex beyond)");
    for (double e : eps)
        if (e < 0.05) throw std::invalid_argument("sheet_constant: quadrature mode needs every epsilon >= 0.05");
    using real = long double;
    const real tol = k <= 3 ? 1e-10L : 1e-7L;
    const double sum_eps = std::accumulate(eps.begin(), eps.end(), 0.0);
    if (k == 1) return 1.0 / sum_eps;
    std::vector<boost::math::quadrature::tanh_sinh<real>> rule;
    for (int i = 0; i < k; ++i) rule.emplace_back(15, 1e-300L);
    std::vector<real> s(k);
    std::vector<int> free;
    auto leaf = [&]() {
        real lg = 0;
        for (int i = 0; i < k; ++i) {
            lg += std::log(std::min(s[i], s[(i + 1) % k]));
            lg -= (2.0L - eps[i]) * std::log(s[i]);
        }
        return std::exp(lg);
    };
    std::function<real(int)> level = [&](int j) -> real {
        if (j == static_cast<int>(free.size())) return leaf();
        std::vector<real> cuts{0.0L, 1.0L};
        for (int i = 0; i < j; ++i) cuts.push_back(s[free[i]]);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        real sum = 0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            if (!(cuts[c + 1] > cuts[c])) continue;
            real err = 0, l1 = 0;
            real v = rule[j].integrate(
                [&](real x) {
                    s[free[j]] = x;
                    return level(j + 1);
                },
                cuts[c], cuts[c + 1], tol, &err, &l1);
            // inner levels only need finiteness; the outermost error estimate is the one checked
            if (!std::isfinite(v) || (j == 0 && err > 1e-8L * std::max(l1, 1e-300L))) {
                char msg[160];
                std::snprintf(msg, sizeof msg, "sheet_constant: quadrature did not converge (error %.3Le, L1 %.3Le)",
                              err, l1);
                throw std::runtime_error(msg);
            }
            sum += v;
        }
        return sum;
    };
    try {
        real total = 0;
        for (int m = 0; m < k; ++m) {
            free.clear();
            for (int i = 0; i < k; ++i)
                if (i != m) free.push_back(i);
            s[m] = 1.0L;
            total += level(0);
        }
        return static_cast<double>(total) / sum_eps;
    } catch (const std::runtime_error&) {
        throw;
    } catch (const std::exception& ex) {
        throw std::runtime_error(std::string("sheet_constant: quadrature failed: ") + ex.what());
    }
}

}  // namespace

double sheet_constant(const std::vector<double>& eps, SheetMode mode) {
    check_eps(eps);
    const double sum = std::accumulate(eps.begin(), eps.end(), 0.0);
    switch (mode) {
        case SheetMode::Closed:
            if (eps.size() <= 3) return sheet_ctilde(eps) * std::tgamma(eps.size() + 1.0) / sum;
            return simplex_sum(eps);
        case SheetMode::Simplex:
            return simplex_sum(eps);
        case SheetMode::Quadrature:
            return nested_quadrature(eps);
    }
    throw std::logic_error("sheet_constant: bad mode");
}

double sheet_cumulant(const SheetSpec& spec, const MultiIndex& alpha) {
    spec.validate();
    if (alpha.dim() != static_cast<int>(spec.epsilons.size()))
        throw std::invalid_argument("sheet_cumulant: multi-index dimension mismatch");
    const int n = alpha.order();
    if (n < 2) throw std::invalid_argument("sheet_cumulant: |alpha| >= 2");
    const std::vector<int> lab = alpha.labels();
    const double l = spec.l;
    // first label fixed, all (n-1)! orderings of the remaining positions (repeats included)
    std::vector<int> pos(n - 1);
    std::iota(pos.begin(), pos.end(), 1);
    double sum = 0;
    do {
        std::vector<double> e{spec.epsilons[lab[0]]};
        for (int p : pos) e.push_back(spec.epsilons[lab[p]]);
        sum += std::pow(sheet_constant(e, SheetMode::Simplex), l);
    } while (std::next_permutation(pos.begin(), pos.end()));
    double norm = 1;
    for (int i : lab) {
        const double e = spec.epsilons[i];
        norm *= std::sqrt(2.0 * std::pow(sheet_constant({e, e}, SheetMode::Simplex), l));
    }
    return std::pow(2.0, n - 1) * sum / norm;
}

double sheet_correlation(const SheetSpec& spec, int i, int j) {
    const int d = static_cast<int>(spec.epsilons.size());
    return sheet_cumulant(spec, MultiIndex::unit(d, i) + MultiIndex::unit(d, j));
}

// ---------------------------------------------------------------- grid version

namespace {

// y = S v with S_ab = r^{|a-b|}, in O(K)
void apply_ar_cov(const std::vector<double>& v, double r, std::vector<double>& y) {
    const std::size_t K = v.size();
    y.assign(K, 0.0);
    double f = 0;
    for (std::size_t a = 0; a < K; ++a) {
        f = v[a] + r * f;
        y[a] = f;
    }
    double b = 0;
    for (std::size_t a = K; a-- > 0;) {
        b = v[a] + r * b;
        y[a] += b - v[a];
    }
}

struct Traces {
    int K;
    std::vector<double> rp;  // r^n
    std::vector<Mat> P;      // S W_i S
    const std::vector<Vec>* w;

    double t2(int i, int j) const {  // tr(W_i S W_j S)
        const Vec& a = (*w)[i];
        const Vec& b = (*w)[j];
        double s = 0;
        for (int x = 0; x < K; ++x)
            for (int y = 0; y < K; ++y) s += a(x) * rp[std::abs(x - y)] * rp[std::abs(x - y)] * b(y);
        return s;
    }
    double t3(int i, int j, int k) const {  // tr(W_i S W_j P_k)
        const Vec& a = (*w)[i];
        const Vec& b = (*w)[j];
        double s = 0;
        for (int x = 0; x < K; ++x)
            for (int y = 0; y < K; ++y) s += a(x) * rp[std::abs(x - y)] * b(y) * P[k](y, x);
        return s;
    }
    double t4(int i, int ii, int j, int jj) const {  // tr(W_i P_ii W_j P_jj)
        const Vec& a = (*w)[i];
        const Vec& b = (*w)[j];
        double s = 0;
        for (int x = 0; x < K; ++x)
            for (int y = 0; y < K; ++y) s += a(x) * P[ii](x, y) * b(y) * P[jj](y, x);
        return s;
    }
};

}  // namespace

SheetDiscrete sheet_discretize(const SheetSpec& spec, const SheetGrid& grid) {
    spec.validate();
    if (!(grid.h > 0) || !(grid.horizon_factor > 0)) throw std::invalid_argument("sheet grid: bad step or horizon");
    SheetDiscrete sd;
    sd.spec = spec;
    const int d = static_cast<int>(spec.epsilons.size());
    const double emin = *std::min_element(spec.epsilons.begin(), spec.epsilons.end());
    const double U = grid.horizon_factor / emin;
    const int cap = spec.l == 1 ? grid.max_points : std::min(grid.max_points, 64);
    sd.h = std::max(grid.h, U / cap);
    sd.K = static_cast<int>(std::ceil(U / sd.h));
    sd.r = std::exp(-sd.h / 2);
    for (int i = 0; i < d; ++i) {
        Vec w(sd.K);
        for (int k = 0; k < sd.K; ++k) w(k) = sd.h * std::exp(-spec.epsilons[i] * (k + 0.5) * sd.h);
        sd.weights.push_back(w);
    }
    Traces tr;
    tr.K = sd.K;
    tr.w = &sd.weights;
    tr.rp.resize(sd.K);
    for (int n = 0; n < sd.K; ++n) tr.rp[n] = std::pow(sd.r, n);
    for (int i = 0; i < d; ++i) {
        Mat P(sd.K, sd.K);
        std::vector<double> col(sd.K), y;
        for (int b = 0; b < sd.K; ++b) {
            for (int a = 0; a < sd.K; ++a) col[a] = sd.weights[i](a) * tr.rp[std::abs(a - b)];
            apply_ar_cov(col, sd.r, y);
            for (int a = 0; a < sd.K; ++a) P(a, b) = y[a];
        }
        tr.P.push_back(std::move(P));
    }
    const double l = spec.l;
    sd.sigma = Vec(d);
    Mat cov(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) cov(i, j) = cov(j, i) = 2.0 * std::pow(tr.t2(i, j), l);
    for (int i = 0; i < d; ++i) sd.sigma(i) = std::sqrt(cov(i, i));
    sd.cumulants = CumulantSet(d, 3);
    for (int i = 0; i < d; ++i) sd.cumulants.set(MultiIndex::unit(d, i), 0.0);
    for (const auto& a : multi_indices(d, 2)) {
        auto lab = a.labels();
        sd.cumulants.set(a, cov(lab[0], lab[1]) / (sd.sigma(lab[0]) * sd.sigma(lab[1])));
    }
    for (const auto& a : multi_indices(d, 3)) {
        auto lab = a.labels();
        double v = 8.0 * std::pow(tr.t3(lab[0], lab[1], lab[2]), l);
        sd.cumulants.set(a, v / (sd.sigma(lab[0]) * sd.sigma(lab[1]) * sd.sigma(lab[2])));
    }
    // Var Gamma_ij = 4 [tr(A_i A_j A_i A_j) + tr(A_i^2 A_j^2)] for normalized second-chaos matrices
    Mat vg(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double s4 = std::pow(sd.sigma(i) * sd.sigma(j), 2);
            vg(i, j) = 4.0 * (std::pow(tr.t4(i, j, i, j), l) + std::pow(tr.t4(i, i, j, j), l)) / s4;
        }
    sd.var_gamma = vg;
    return sd;
}

ChaosVector sheet_kernels(const SheetDiscrete& sd) {
    if (sd.spec.l != 1) throw std::invalid_argument("sheet_kernels: explicit kernels only for l = 1");
    checked_size(2, sd.K, "sheet kernel");
    const int K = sd.K;
    // X = L xi with X_0 = xi_0, X_k = r X_{k-1} + sqrt(1-r^2) xi_k
    Mat L = Mat::Zero(K, K);
    const double c = std::sqrt(1 - sd.r * sd.r);
    for (int b = 0; b < K; ++b) {
        double v = b == 0 ? 1.0 : c;
        for (int a = b; a < K; ++a) {
            L(a, b) = v;
            v *= sd.r;
        }
    }
    std::vector<SymKernel> ks;
    for (std::size_t i = 0; i < sd.weights.size(); ++i) {
        Mat A = L.transpose() * sd.weights[i].asDiagonal() * L / sd.sigma(i);
        const Mat S = 0.5 * (A + A.transpose());
        ks.push_back(from_matrix(S));
    }
    return ChaosVector::from_kernels(ks);
}

SheetResult sheet_experiment(const SheetSpec& spec, const TestFunction& g, const MCConfig& mc,
                             const SheetGrid& grid) {
    const SheetDiscrete sd = sheet_discretize(spec, grid);
    const int d = static_cast<int>(spec.epsilons.size());
    if (g.d != d) throw std::invalid_argument("sheet_experiment: test function dimension mismatch");
    SheetResult res;
    res.cumulants = sd.cumulants;
    res.covariance = Mat(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            res.covariance(i, j) = sd.cumulants.get(MultiIndex::unit(d, i) + MultiIndex::unit(d, j));
    const GaussianSpec Z(res.covariance);
    res.egz = gaussian_expectation(g, MultiIndex::zero(d), Z);
    res.e3 = edgeworth3(sd.cumulants, Z, g);

    const int K = sd.K;
    const double r = sd.r, c = std::sqrt(1 - r * r);
    const bool plane = spec.l == 2;
    StatAccumulator acc = run_mc(mc, 1, [&](std::mt19937_64& rng, std::uint64_t count, StatAccumulator& a) {
        std::normal_distribution<double> nd;
        Vec F(d);
        std::vector<double> X(plane ? static_cast<std::size_t>(K) * K : K);
        for (std::uint64_t s = 0; s < count; ++s) {
            F.setZero();
            if (!plane) {
                double x = 0;
                for (int k = 0; k < K; ++k) {
                    x = k == 0 ? nd(rng) : r * x + c * nd(rng);
                    const double q = x * x - 1.0;
                    for (int i = 0; i < d; ++i) F(i) += sd.weights[i](k) * q;
                }
            } else {
                for (auto& v : X) v = nd(rng);
                for (int a = 0; a < K; ++a)  // along the second axis
                    for (int b = 1; b < K; ++b) X[a * K + b] = r * X[a * K + b - 1] + c * X[a * K + b];
                for (int a = 1; a < K; ++a)  // along the first axis
                    for (int b = 0; b < K; ++b) X[a * K + b] = r * X[(a - 1) * K + b] + c * X[a * K + b];
                for (int a = 0; a < K; ++a)
                    for (int b = 0; b < K; ++b) {
                        const double q = X[a * K + b] * X[a * K + b] - 1.0;
                        for (int i = 0; i < d; ++i) F(i) += sd.weights[i](a) * sd.weights[i](b) * q;
                    }
            }
            for (int i = 0; i < d; ++i) F(i) /= sd.sigma(i);
            const double v = g(F);
            a.add(&v);
        }
    });
    res.mean_g = acc.mean()(0);
    const double se = acc.se(0);
    double scale_norm = 0, emax = 0;
    for (double e : spec.epsilons) {
        scale_norm += std::pow(e, spec.l);
        emax = std::max(emax, e);
    }
    scale_norm = std::sqrt(scale_norm);
    res.ratio = (res.mean_g - res.e3) / scale_norm;
    res.ratio_se = se / scale_norm;
    RateRow& row = res.row;
    row.scale = emax;
    row.delta_gamma = std::sqrt(sd.var_gamma.sum());
    row.delta_c = 0.0;  // Z carries the covariance of F
    row.phi = row.delta_gamma;
    row.raw_gap = res.mean_g - res.egz;
    row.raw_gap_se = se;
    row.corrected_gap = res.mean_g - res.e3;
    row.corrected_gap_se = se;
    return res;
}

SheetReport sheet_rates(int l, const std::vector<double>& shape, const std::vector<double>& scales,
                        const TestFunction& g, const MCConfig& mc, const SheetGrid& grid) {
    if (scales.empty()) throw std::invalid_argument("sheet_rates: no scales");
    SheetReport rep;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        SheetSpec spec{l, {}};
        for (double a : shape) spec.epsilons.push_back(a * scales[i]);
        spec.validate();
        MCConfig cfg = mc;
        cfg.seed = splitmix64(mc.seed + i);
        rep.results.push_back(sheet_experiment(spec, g, cfg, grid));
        rep.scales.push_back(scales[i]);
        rep.table.rows.push_back(rep.results.back().row);
    }
    rep.table.sort();
    return rep;
}

}  // namespace chaoslab
