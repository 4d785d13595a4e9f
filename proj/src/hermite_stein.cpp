#include "chaoslab/hermite_stein.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace chaoslab {

void hermite_he_all(double x, int n, double* out) {
    out[0] = 1.0;
    if (n >= 1) out[1] = x;
    for (int k = 2; k <= n; ++k) out[k] = x * out[k - 1] - (k - 1) * out[k - 2];
}

double hermite_he(int n, double x) {
    if (n < 0) throw std::invalid_argument("hermite_he: negative degree");
    std::vector<double> h(n + 1);
    hermite_he_all(x, n, h.data());
    return h[n];
}

namespace {

QuadRule golub_welsch(const Vec& diag, const Vec& off, double mu0) {
    Eigen::SelfAdjointEigenSolver<Mat> es;
    es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw std::runtime_error("Golub-Welsch eigen solve failed");
    QuadRule q;
    const Eigen::Index n = diag.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        q.x.push_back(es.eigenvalues()(i));
        double v = es.eigenvectors()(0, i);
        q.w.push_back(mu0 * v * v);
    }
    return q;
}

enum class Family { Hermite, Legendre, Laguerre };

const QuadRule& cached_rule(Family fam, int n) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, QuadRule> cache;
    if (n < 1 || n > 512) throw std::invalid_argument("quadrature node count out of range");
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(static_cast<int>(fam), n);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    Vec diag = Vec::Zero(n), off = Vec::Zero(std::max(n - 1, 0));
    QuadRule q;
    switch (fam) {
        case Family::Hermite:
            for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
            q = golub_welsch(diag, off, 1.0);
            break;
        case Family::Legendre:
            for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
            q = golub_welsch(diag, off, 2.0);
            for (std::size_t i = 0; i < q.x.size(); ++i) {
                q.x[i] = 0.5 * (q.x[i] + 1.0);
                q.w[i] *= 0.5;
            }
            break;
        case Family::Laguerre:
            for (int k = 0; k < n; ++k) diag(k) = 2.0 * k + 1.0;
            for (int k = 1; k < n; ++k) off(k - 1) = k;
            q = golub_welsch(diag, off, 1.0);
            break;
    }
    return cache.emplace(key, std::move(q)).first->second;
}

Mat psd_root(const Mat& cov, double rel_tol = 1e-12) {
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
        if (es.eigenvalues()(i) > rel_tol * top) keep.push_back(i);
    Mat W(cov.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
        W.col(k) = es.eigenvectors().col(keep[k]) * std::sqrt(es.eigenvalues()(keep[k]));
    return W;
}

double expect_root(const std::function<double(const Vec&)>& h, const Mat& W, const Vec& mean, int nodes) {
    const int r = static_cast<int>(W.cols());
    if (r == 0) return h(mean);
    if (r > 3) throw std::invalid_argument("Gauss-Hermite quadrature supports rank <= 3");
    const QuadRule& q = gauss_hermite(nodes);
    std::vector<int> idx(r, 0);
    Vec z(r), x(mean.size());
    double acc = 0.0;
    while (true) {
        double w = 1.0;
        for (int k = 0; k < r; ++k) {
            z(k) = q.x[idx[k]];
            w *= q.w[idx[k]];
        }
        x.noalias() = mean + W * z;
        acc += w * h(x);
        int k = r - 1;
        while (k >= 0 && ++idx[k] == nodes) idx[k--] = 0;
        if (k < 0) break;
    }
    return acc;
}

double smoothed_partial(const TestFunction& g, const Vec& mean, const Mat& cov, const Mat& root,
                        const MultiIndex& alpha, int nodes) {
    if (g.smoothed) return g.smoothed(mean, cov, alpha);
    return expect_root([&](const Vec& y) { return g.partial(y, alpha); }, root, mean, nodes);
}

}  // namespace

const QuadRule& gauss_hermite(int n) { return cached_rule(Family::Hermite, n); }
const QuadRule& gauss_legendre01(int n) { return cached_rule(Family::Legendre, n); }
const QuadRule& gauss_laguerre(int n) { return cached_rule(Family::Laguerre, n); }

GaussianSpec::GaussianSpec(Mat cov) : cov_(std::move(cov)) {
    if (cov_.rows() == 0 || cov_.rows() != cov_.cols()) throw std::invalid_argument("covariance must be square");
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + cov_.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(cov_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < -1e-12) throw std::invalid_argument("covariance has a negative eigenvalue");
    root_ = psd_root(cov_);
    singular_ = root_.cols() < cov_.rows();
    if (!singular_) {
        Eigen::LLT<Mat> llt(cov_);
        if (llt.info() != Eigen::Success) {
            singular_ = true;
        } else {
            chol_ = llt.matrixL();
            prec_ = llt.solve(Mat::Identity(cov_.rows(), cov_.cols()));
        }
    }
}

const Mat& GaussianSpec::chol() const {
    if (singular_) throw std::runtime_error("covariance is singular: no Cholesky factor");
    return chol_;
}

const Mat& GaussianSpec::precision() const {
    if (singular_) throw std::runtime_error("covariance is singular: no precision matrix");
    return prec_;
}

// ---------------------------------------------------------------- test functions

TestFunction TestFunction::constant(int d, double c) {
    TestFunction g;
    g.d = d;
    g.name = "constant";
    g.value = [c](const Vec&) { return c; };
    g.partial = [c](const Vec&, const MultiIndex& a) { return a.order() == 0 ? c : 0.0; };
    g.sup = {std::abs(c), 0.0, 0.0, 0.0};
    g.smoothed = [c](const Vec&, const Mat&, const MultiIndex& a) { return a.order() == 0 ? c : 0.0; };
    return g;
}

TestFunction TestFunction::linear(const Vec& a) {
    TestFunction g;
    g.d = static_cast<int>(a.size());
    g.name = "linear";
    g.value = [a](const Vec& x) { return a.dot(x); };
    auto part = [a](const Vec& x, const MultiIndex& al) {
        int n = al.order();
        if (n == 0) return a.dot(x);
        if (n > 1) return 0.0;
        for (int i = 0; i < al.dim(); ++i)
            if (al[i]) return a(i);
        return 0.0;
    };
    g.partial = part;
    g.sup = {std::numeric_limits<double>::infinity(), a.cwiseAbs().maxCoeff(), 0.0, 0.0};
    g.smoothed = [part](const Vec& y, const Mat&, const MultiIndex& al) { return part(y, al); };
    return g;
}

TestFunction TestFunction::quadratic(int d, int i, int j) {
    if (i < 0 || j < 0 || i >= d || j >= d) throw std::out_of_range("quadratic: index out of range");
    TestFunction g;
    g.d = d;
    g.name = "quadratic";
    g.value = [i, j](const Vec& x) { return x(i) * x(j); };
    auto part = [i, j, d](const Vec& x, const MultiIndex& al) {
        int n = al.order();
        if (n == 0) return x(i) * x(j);
        if (n == 1) {
            double s = 0.0;
            if (al[i]) s += x(j);
            if (al[j]) s += x(i);
            return s;
        }
        if (n == 2) {
            MultiIndex t = MultiIndex::unit(d, i) + MultiIndex::unit(d, j);
            return al == t ? (i == j ? 2.0 : 1.0) : 0.0;
        }
        return 0.0;
    };
    g.partial = part;
    double inf = std::numeric_limits<double>::infinity();
    g.sup = {inf, inf, i == j ? 2.0 : 1.0, 0.0};
    g.smoothed = [part, i, j](const Vec& y, const Mat& cov, const MultiIndex& al) {
        double v = part(y, al);
        if (al.order() == 0) v += cov(i, j);
        return v;
    };
    return g;
}

TestFunction TestFunction::trig(const Vec& a, double phi) {
    TestFunction g;
    g.d = static_cast<int>(a.size());
    g.name = "trig";
    g.value = [a, phi](const Vec& x) { return std::cos(a.dot(x) + phi); };
    auto coef = [a](const MultiIndex& al) {
        double c = 1.0;
        for (int i = 0; i < al.dim(); ++i) c *= std::pow(a(i), al[i]);
        return c;
    };
    const double half_pi = 0.5 * std::numbers::pi;
    g.partial = [a, phi, coef, half_pi](const Vec& x, const MultiIndex& al) {
        return coef(al) * std::cos(a.dot(x) + phi + al.order() * half_pi);
    };
    double am = a.cwiseAbs().maxCoeff();
    g.sup = {1.0, am, am * am, am * am * am};
    g.smoothed = [a, phi, coef, half_pi](const Vec& y, const Mat& cov, const MultiIndex& al) {
        return coef(al) * std::cos(a.dot(y) + phi + al.order() * half_pi) * std::exp(-0.5 * a.dot(cov * a));
    };
    return g;
}

namespace {

// n-th derivative of x^b exp(-x^2/(2w^2))
double damped_1d(int b, int n, double x, double w) {
    double he[8];
    hermite_he_all(x / w, n, he);
    const double env = std::exp(-0.5 * x * x / (w * w));
    double s = 0.0;
    for (int k = 0; k <= std::min(n, b); ++k) {
        double dpow = factorial(b) / factorial(b - k) * std::pow(x, b - k);
        double denv = std::pow(-1.0 / w, n - k) * he[n - k];
        s += binomial(n, k) * dpow * denv;
    }
    return s * env;
}

double damped_1d_sup(int b, int n, double w) {
    double m = 0.0;
    const int steps = 40000;
    const double lo = -12.0 * w, hi = 12.0 * w;
    for (int i = 0; i <= steps; ++i) {
        double x = lo + (hi - lo) * i / steps;
        m = std::max(m, std::abs(damped_1d(b, n, x, w)));
    }
    return m;
}

}  // namespace

TestFunction TestFunction::damped_monomial(const MultiIndex& beta, double w) {
    if (w <= 0) throw std::invalid_argument("damping width must be positive");
    TestFunction g;
    g.d = beta.dim();
    g.name = "damped_monomial" + beta.str();
    auto part = [beta, w](const Vec& x, const MultiIndex& al) {
        if (al.order() > 4) throw std::invalid_argument("damped monomial partials supported up to order 4");
        double p = 1.0;
        for (int i = 0; i < beta.dim(); ++i) p *= damped_1d(beta[i], al[i], x(i), w);
        return p;
    };
    g.partial = part;
    g.value = [part, d = g.d](const Vec& x) { return part(x, MultiIndex::zero(d)); };
    std::vector<std::array<double, 4>> s1(g.d);
    for (int i = 0; i < g.d; ++i)
        for (int n = 0; n <= 3; ++n) s1[i][n] = damped_1d_sup(beta[i], n, w);
    for (int k = 0; k <= 3; ++k) {
        double m = 0.0;
        for (const auto& al : multi_indices(g.d, k)) {
            double p = 1.0;
            for (int i = 0; i < g.d; ++i) p *= s1[i][al[i]];
            m = std::max(m, p);
        }
        g.sup[k] = m;
    }
    return g;
}

// ---------------------------------------------------------------- Hermite / expectations

double hermite(const MultiIndex& alpha, const Vec& x, const Vec& mu, const GaussianSpec& C) {
    const int d = C.d();
    if (alpha.dim() != d || x.size() != d || mu.size() != d) throw std::invalid_argument("hermite: dimension mismatch");
    if (C.singular()) throw std::invalid_argument("hermite: covariance is singular");
    const Mat& c = C.precision();
    const Vec y = c * (x - mu);
    std::map<MultiIndex, double> memo;
    auto rec = [&](auto&& self, const MultiIndex& a) -> double {
        if (a.order() == 0) return 1.0;
        auto it = memo.find(a);
        if (it != memo.end()) return it->second;
        int i = 0;
        while (a[i] == 0) ++i;
        MultiIndex b = a;
        --b.e[i];
        double v = y(i) * self(self, b);
        for (int k = 0; k < d; ++k) {
            if (b[k] == 0) continue;
            MultiIndex bk = b;
            --bk.e[k];
            v -= c(i, k) * b[k] * self(self, bk);
        }
        memo.emplace(a, v);
        return v;
    };
    return rec(rec, alpha);
}

double gauss_expect(const std::function<double(const Vec&)>& h, const GaussianSpec& Z, int nodes) {
    return expect_root(h, Z.root(), Vec::Zero(Z.d()), nodes);
}

double gauss_expect(const std::function<double(const Vec&)>& h, const Mat& cov, const Vec& mean, int nodes) {
    return expect_root(h, psd_root(cov), mean, nodes);
}

double gaussian_expectation(const TestFunction& g, const MultiIndex& alpha, const GaussianSpec& Z, int nodes) {
    if (alpha.dim() != Z.d() || g.d != Z.d()) throw std::invalid_argument("gaussian_expectation: dimension mismatch");
    if (alpha.order() > 3) throw std::invalid_argument("gaussian_expectation: |alpha| <= 3");
    return smoothed_partial(g, Vec::Zero(Z.d()), Z.cov(), Z.root(), alpha, nodes);
}

std::pair<double, double> ibp_hermite(const TestFunction& g, int i, const MultiIndex& alpha, const GaussianSpec& Z) {
    const int d = Z.d();
    const Vec mu = Vec::Zero(d);
    const MultiIndex ei = MultiIndex::unit(d, i);
    double lhs = gauss_expect([&](const Vec& x) { return g.partial(x, ei) * hermite(alpha, x, mu, Z); }, Z);
    double rhs = gauss_expect([&](const Vec& x) { return g.value(x) * hermite(alpha + ei, x, mu, Z); }, Z);
    return {lhs, rhs};
}

std::pair<double, double> ibp_covariance(const TestFunction& g, int i, const GaussianSpec& Z) {
    const int d = Z.d();
    double lhs = gauss_expect([&](const Vec& x) { return g.value(x) * x(i); }, Z);
    double rhs = 0.0;
    for (int j = 0; j < d; ++j) rhs += Z.cov()(i, j) * gaussian_expectation(g, MultiIndex::unit(d, j), Z);
    return {lhs, rhs};
}

// ---------------------------------------------------------------- U transform

namespace {

double u_once(const TestFunction& g, const GaussianSpec& C, const Vec& x, const MultiIndex& alpha, int s_nodes,
              int gh_nodes, bool laguerre) {
    const int k = alpha.order();
    const Mat& W = C.root();
    const Mat& cov = C.cov();
    const MultiIndex zero = MultiIndex::zero(C.d());
    const double base = k == 0 ? smoothed_partial(g, Vec::Zero(C.d()), cov, W, zero, gh_nodes) : 0.0;
    // E[d_alpha g(s x + sqrt(1-s^2) N)]
    auto inner = [&](double s) {
        const double c = std::max(0.0, 1.0 - s * s);
        return smoothed_partial(g, s * x, c * cov, std::sqrt(c) * W, alpha, gh_nodes);
    };
    double acc = 0.0;
    if (!laguerre) {
        const QuadRule& q = gauss_legendre01(s_nodes);
        for (std::size_t n = 0; n < q.x.size(); ++n) {
            const double s = q.x[n];
            const double f = k == 0 ? (inner(s) - base) / s : std::pow(s, k - 1) * inner(s);
            acc += q.w[n] * f;
        }
    } else {
        // s = e^{-t}: integral of e^{-t} * [e^{-t(k-1)} E(e^{-t})]
        const QuadRule& q = gauss_laguerre(s_nodes);
        for (std::size_t n = 0; n < q.x.size(); ++n) {
            const double t = q.x[n];
            const double s = std::exp(-t);
            const double f = k == 0 ? std::exp(t) * (inner(s) - base) : std::exp(-t * (k - 1)) * inner(s);
            acc += q.w[n] * f;
        }
    }
    return acc;
}

}  // namespace

double u_transform(const TestFunction& g, const GaussianSpec& C, const Vec& x, const MultiIndex& alpha,
                   const UOptions& opt) {
    if (g.d != C.d() || x.size() != C.d() || alpha.dim() != C.d())
        throw std::invalid_argument("u_transform: dimension mismatch");
    if (alpha.order() > 3) throw std::invalid_argument("u_transform: |alpha| <= 3");
    double v = u_once(g, C, x, alpha, opt.s_nodes, opt.gh_nodes, opt.laguerre);
    if (opt.verify) {
        double v2 = u_once(g, C, x, alpha, 2 * opt.s_nodes, 2 * opt.gh_nodes, opt.laguerre);
        if (std::abs(v2 - v) > 1e-6)
            throw std::runtime_error("u_transform: quadrature not converged (node doubling changed result by " +
                                     std::to_string(std::abs(v2 - v)) + ")");
    }
    return v;
}

int stein_sign() {
    static const int sign = [] {
        Vec a(1);
        a << 1.0;
        TestFunction g = TestFunction::linear(a);
        GaussianSpec C = GaussianSpec::identity(1);
        Vec x(1);
        x << 0.7;
        double grad = u_transform(g, C, x, MultiIndex::unit(1, 0));
        double hess = u_transform(g, C, x, MultiIndex(std::vector<int>{2}));
        double lhs = hess - x(0) * grad;
        double rhs = g.value(x) - 0.0;
        return lhs * rhs >= 0 ? 1 : -1;
    }();
    return sign;
}

double stein_residual(const TestFunction& g, const GaussianSpec& C, const Vec& x, const UOptions& opt) {
    const int d = C.d();
    if (d > 3) throw std::invalid_argument("stein_residual: d <= 3");
    double lhs = 0.0;
    for (int i = 0; i < d; ++i) {
        const MultiIndex ei = MultiIndex::unit(d, i);
        lhs -= x(i) * u_transform(g, C, x, ei, opt);
        for (int j = i; j < d; ++j) {
            const double hij = u_transform(g, C, x, ei + MultiIndex::unit(d, j), opt);
            lhs += (i == j ? 1.0 : 2.0) * C.cov()(i, j) * hij;
        }
    }
    const double eg = gaussian_expectation(g, MultiIndex::zero(d), C, opt.gh_nodes);
    return lhs - stein_sign() * (g.value(x) - eg);
}

}  // namespace chaoslab
