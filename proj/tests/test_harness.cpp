#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "chaoslab/edgeworth.hpp"
#include "chaoslab/io.hpp"
#include "chaoslab/mc.hpp"
#include "chaoslab/parallel.hpp"

using namespace chaoslab;

TEST_CASE("splitmix64 reference value") {
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(1) != splitmix64(2));
}

TEST_CASE("results do not depend on the thread count") {
    MCConfig cfg;
    cfg.samples = 50000;
    cfg.chunk = 1000;
    cfg.seed = 42;
    auto run = [&](int threads) {
        MCConfig c = cfg;
        c.threads = threads;
        return run_mc_gaussian(c, 3, 2, [](const double* xi, double* out) {
            out[0] = xi[0] * xi[1];
            out[1] = std::cos(xi[2]);
        });
    };
    const StatAccumulator a = run(1), b = run(2), c = run(5);
    for (int i = 0; i < 2; ++i) {
        CHECK(a.mean()(i) == b.mean()(i));
        CHECK(a.mean()(i) == c.mean()(i));
        CHECK(a.se(i) == c.se(i));
    }
    CHECK(a.count() == 50000);
    // nor on the task size
    cfg.chunk = 7000;
    const StatAccumulator d = run(3);
    CHECK(d.mean()(0) == a.mean()(0));
    CHECK(d.se(1) == a.se(1));
    cfg.chunk = 1000;
    cfg.seed = 43;
    CHECK(run(1).mean()(0) != a.mean()(0));
    // collected rows line up with the accumulated statistics
    cfg.seed = 42;
    cfg.threads = 3;
    const Mat rows = collect_mc_gaussian(cfg, 3, 1, [](const double* xi, double* out) { out[0] = xi[0] * xi[1]; });
    CHECK(rows.col(0).mean() == doctest::Approx(a.mean()(0)).epsilon(1e-12));
}

TEST_CASE("accumulator merge equals sequential accumulation") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    std::vector<std::array<double, 2>> xs(1000);
    for (auto& x : xs) x = {nd(rng), 0.5 * nd(rng) + 2};
    StatAccumulator all(2), left(2), right(2);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        all.add(xs[i].data());
        (i < 300 ? left : right).add(xs[i].data());
    }
    left.merge(right);
    CHECK(left.count() == all.count());
    CHECK((left.mean() - all.mean()).norm() < 1e-13);
    CHECK((left.covariance() - all.covariance()).norm() < 1e-12);
    // two-pass oracle
    double m = 0, v = 0;
    for (auto& x : xs) m += x[1];
    m /= xs.size();
    for (auto& x : xs) v += (x[1] - m) * (x[1] - m);
    v /= xs.size() - 1;
    CHECK(all.covariance()(1, 1) == doctest::Approx(v).epsilon(1e-12));
    CHECK(all.se(1) == doctest::Approx(std::sqrt(v / xs.size())).epsilon(1e-12));
    Vec w(2);
    w << 1, -1;
    const Mat C = all.covariance();
    CHECK(all.se_of(w) == doctest::Approx(std::sqrt((C(0, 0) + C(1, 1) - 2 * C(0, 1)) / xs.size())).epsilon(1e-12));
    CHECK_THROWS(all.merge(StatAccumulator(3)));
}

TEST_CASE("Monte Carlo expectation of a first-chaos functional") {
    Kernel f(1, 2, {0.6, 0.8});
    const ChaosVector F = ChaosVector::from_kernels({SymKernel(f)});
    MCConfig mc;
    mc.samples = 200000;
    mc.seed = 11;
    const Estimate e = estimate_expectation(F, TestFunction::trig(Vec::Constant(1, 1.0)), mc);
    CHECK(std::abs(e.mean - std::exp(-0.5)) < 4 * e.se);
    const Estimate c = estimate_expectation(F, TestFunction::constant(1, 2.5), mc);
    CHECK(c.mean == 2.5);
    CHECK(c.se == 0.0);
    // Gaussian pair, g = x1 x2: Isserlis gives the covariance
    Kernel h(1, 2, {0.3, -0.5});
    const ChaosVector G = ChaosVector::from_kernels({SymKernel(f), SymKernel(h)});
    const Estimate q = estimate_expectation(G, TestFunction::quadratic(2, 0, 1), mc);
    Mat cov(2, 2);
    cov << 1, 0.18 - 0.4, 0.18 - 0.4, 0.34;
    CHECK(std::abs(q.mean - isserlis_moment(MultiIndex(std::vector<int>{1, 1}), cov)) < 4 * q.se);
}

TEST_CASE("Stein identity on a small second-chaos vector") {
    Mat A(2, 2), B(2, 2);
    A << 0.5, 0.2, 0.2, -0.3;
    B << 0.1, 0.4, 0.4, 0.2;
    const ChaosVector F = ChaosVector::from_kernels({from_matrix(A), from_matrix(B)});
    const GaussianSpec C(chaos_covariance(F));
    Vec a(2);
    a << 0.9, 0.5;
    MCConfig mc;
    mc.samples = 20000;
    mc.seed = 5;
    UOptions opt;
    opt.s_nodes = 16;
    const SteinCheck s = stein_identity_check(F, TestFunction::trig(a, 0.2), C, mc, opt);
    CHECK(std::abs(s.lhs.mean - s.rhs.mean) < 4 * s.combined_se);
    CHECK(s.paired_se > 0);
}

TEST_CASE("rate fits") {
    std::vector<double> x{10, 20, 40, 80, 160}, y;
    for (double t : x) y.push_back(3 * std::pow(t, -0.5));
    const Slope s = rate_fit(x, y);
    CHECK(s.slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(s.se < 1e-12);
    y[2] = 0;
    CHECK_THROWS_AS(rate_fit(x, y), std::domain_error);
    CHECK_THROWS(rate_fit({1.0}, {1.0}));
    RateTable t;
    for (double v : {4.0, 1.0, 2.0, 8.0}) {
        RateRow r;
        r.scale = v;
        r.delta_gamma = -std::pow(v, -1.0);  // fitted on absolute values
        t.rows.push_back(r);
    }
    CHECK(rate_fit(t, &RateRow::delta_gamma).slope == doctest::Approx(-1.0));
    t.rows.pop_back();
    CHECK_THROWS(rate_fit(t, &RateRow::delta_gamma));
}

TEST_CASE("rate fit on a noisy synthetic power law") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    int inside = 0;
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> x, y;
        for (double t = 16; t <= 4096; t *= 2) {
            x.push_back(t);
            y.push_back(std::pow(t, -0.75) * std::exp(0.05 * nd(rng)));
        }
        const Slope s = rate_fit(x, y);
        inside += std::abs(s.slope + 0.75) <= 2 * s.se;
    }
    // the t-based 2 SE interval with 7 points covers about 90%
    CHECK(inside >= 160);
}

TEST_CASE("rate tables round trip through CSV") {
    RateTable t;
    for (int i = 3; i >= 1; --i) {
        RateRow r;
        r.scale = i * 0.1;
        r.delta_gamma = 1.0 / 3 * i;
        r.raw_gap = -1e-7 * i;
        r.corrected_gap_se = std::nan("");
        t.rows.push_back(r);
    }
    t.sort();
    CHECK(t.rows.front().scale == doctest::Approx(0.1));
    const std::string csv = t.to_csv();
    CHECK(csv.rfind("scale,delta_gamma,delta_c,phi,raw_gap,raw_gap_se,corrected_gap,corrected_gap_se\n", 0) == 0);
    const RateTable u = RateTable::from_csv(csv);
    REQUIRE(u.rows.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(u.rows[i].delta_gamma == doctest::Approx(t.rows[i].delta_gamma).epsilon(1e-12));
        CHECK(u.rows[i].raw_gap == doctest::Approx(t.rows[i].raw_gap).epsilon(1e-12));
        CHECK(std::isnan(u.rows[i].corrected_gap_se));
    }
    CHECK_THROWS(RateTable::from_csv("x,y\n1,2\n"));
    CHECK_THROWS(RateTable::from_csv("scale,a\n1,2\n"));
}

TEST_CASE("thread resolution and error propagation") {
    CHECK(resolve_threads(2) == 2);
    setenv("CHAOSLAB_THREADS", "3", 1);
    CHECK(resolve_threads(0) == 3);
    setenv("CHAOSLAB_THREADS", "junk", 1);
    CHECK(resolve_threads(0) >= 1);
    unsetenv("CHAOSLAB_THREADS");
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 7) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}

TEST_CASE("kernel and vector JSON") {
    const Json k = Json::parse(R"({"order": 2, "dim": 2, "coeffs": [1, 0.5, 0.5, -1]})");
    const SymKernel f = kernel_from_json(k);
    CHECK(f.at({0, 1}) == 0.5);
    std::vector<std::string> warn;
    kernel_from_json(Json::parse(R"({"matrix": [[1, 0.5], [0.5000000000001, 2]]})"), "k", &warn);
    CHECK(warn.empty());
    kernel_from_json(Json::parse(R"({"matrix": [[1, 0.5], [0.50000001, 2]]})"), "k", &warn);
    CHECK(warn.size() == 1);
    try {
        kernel_from_json(Json::parse(R"({"order": 2, "dim": 2, "coeffs": [1, 0.5, 0.4, -1]})"), "kernels[0]");
        FAIL("asymmetric kernel accepted");
    } catch (const ConfigError& e) {
        CHECK(e.field == "kernels[0]");
    }
    CHECK_THROWS_AS(kernel_from_json(Json::parse(R"({"order": 2, "dim": 2, "coeffs": [1, 2]})")), ConfigError);
    CHECK_THROWS_AS(kernel_from_json(Json::parse(R"({"order": 2, "coeffs": [1]})")), ConfigError);
    const ChaosVector F = chaos_vector_from_json(Json::parse(
        R"({"components": [{"constant": 0.5, "kernels": [{"order": 1, "dim": 2, "coeffs": [1, 0]},
                                                         {"matrix": [[0, 1], [1, 0]]}]}]})"));
    REQUIRE(F.d() == 1);
    CHECK(F[0].constant == 0.5);
    CHECK(F[0].terms.size() == 2);
    const ChaosVector G = chaos_vector_from_json(chaos_vector_to_json(F));
    CHECK(G[0].variance() == doctest::Approx(F[0].variance()));
    CHECK_THROWS_AS(chaos_vector_from_json(Json::parse(R"({"kernels": []})")), ConfigError);
    CHECK_THROWS_AS(read_json_file("/nonexistent/file.json"), ConfigError);
    const Mat m = matrix_from_json(matrix_to_json(Mat::Identity(3, 3)));
    CHECK(m.isIdentity());
}
