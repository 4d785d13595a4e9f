#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "chaoslab/multiindex.hpp"
#include "chaoslab/tensor.hpp"

namespace chaoslab {

// Probabilists' Hermite He_0..He_n at x.
void hermite_he_all(double x, int n, double* out);
double hermite_he(int n, double x);

struct QuadRule {
    std::vector<double> x, w;
};
// Golub-Welsch rules. Hermite: weight = standard normal density (sum w = 1).
const QuadRule& gauss_hermite(int n);
// Legendre on (0,1), sum w = 1.
const QuadRule& gauss_legendre01(int n);
// Laguerre, weight e^{-t} on (0,inf).
const QuadRule& gauss_laguerre(int n);

class GaussianSpec {
public:
    GaussianSpec() = default;
    explicit GaussianSpec(Mat cov);
    static GaussianSpec identity(int d) { return GaussianSpec(Mat::Identity(d, d)); }

    int d() const { return static_cast<int>(cov_.rows()); }
    const Mat& cov() const { return cov_; }
    bool singular() const { return singular_; }
    // lower Cholesky factor; throws if singular
    const Mat& chol() const;
    // C^{-1}; throws if singular
    const Mat& precision() const;
    // d x rank factor W with W W^T = cov (null directions dropped)
    const Mat& root() const { return root_; }
    int rank() const { return static_cast<int>(root_.cols()); }

private:
    Mat cov_, chol_, prec_, root_;
    bool singular_ = false;
};

// Three-times differentiable test function with hand-written partials.
struct TestFunction {
    int d = 1;
    std::string name;
    std::function<double(const Vec&)> value;
    // partial(x, alpha) = d_alpha g(x) for |alpha| <= 3 (alpha = 0 gives the value)
    std::function<double(const Vec&, const MultiIndex&)> partial;
    // sup |d_alpha g| maximized over |alpha| = k, k = 0..3 (inf if unbounded)
    std::array<double, 4> sup{};
    // optional closed form of E[d_alpha g(y + N)], N ~ N(0, cov)
    std::function<double(const Vec&, const Mat&, const MultiIndex&)> smoothed;

    double operator()(const Vec& x) const { return value(x); }

    static TestFunction constant(int d, double c);
    static TestFunction linear(const Vec& a);
    // x_i x_j (unbounded; for residual checks only)
    static TestFunction quadratic(int d, int i, int j);
    // cos(<a,x> + phi)
    static TestFunction trig(const Vec& a, double phi = 0.0);
    // prod_i x_i^{beta_i} exp(-x_i^2 / (2 w^2))
    static TestFunction damped_monomial(const MultiIndex& beta, double w = 3.0);
};

// H_alpha(x, mu, C) built from C^{-1} via the integration-by-parts recurrence.
double hermite(const MultiIndex& alpha, const Vec& x, const Vec& mu, const GaussianSpec& C);

// E[h(mean + Z)] by tensorized Gauss-Hermite after whitening (rank <= 3).
double gauss_expect(const std::function<double(const Vec&)>& h, const GaussianSpec& Z, int nodes = 40);
double gauss_expect(const std::function<double(const Vec&)>& h, const Mat& cov, const Vec& mean, int nodes = 40);

// E[d_alpha g(Z)]
double gaussian_expectation(const TestFunction& g, const MultiIndex& alpha, const GaussianSpec& Z, int nodes = 40);
// Integration-by-parts identities; each returns (lhs, rhs).
std::pair<double, double> ibp_hermite(const TestFunction& g, int i, const MultiIndex& alpha, const GaussianSpec& Z);
std::pair<double, double> ibp_covariance(const TestFunction& g, int i, const GaussianSpec& Z);

struct UOptions {
    int s_nodes = 64;
    int gh_nodes = 40;
    bool verify = false;  // repeat with doubled nodes, throw if change > 1e-6
    bool laguerre = false;  // use s = e^{-t} with Gauss-Laguerre instead
};

// d_alpha U_{g,C}(x); alpha = 0 returns U itself.
double u_transform(const TestFunction& g, const GaussianSpec& C, const Vec& x, const MultiIndex& alpha,
                   const UOptions& opt = {});

// Sign s in <C, Hess U> - <x, grad U> = s (g - E g(Z)), calibrated once on a linear g.
int stein_sign();
double stein_residual(const TestFunction& g, const GaussianSpec& C, const Vec& x, const UOptions& opt = {});

}  // namespace chaoslab
