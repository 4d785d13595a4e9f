#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "chaoslab/chaos.hpp"
#include "chaoslab/hermite_stein.hpp"

using namespace chaoslab;

namespace {

Mat random_sym(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> nd;
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = nd(rng);
    return A;
}

Vec random_vec(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> nd;
    Vec v(n);
    for (auto& x : v) x = nd(rng);
    return v;
}

}  // namespace

TEST_CASE("beta coefficients") {
    CHECK(beta_coef(2, 2, 1) == 4);
    CHECK(beta_coef(3, 2, 2) == 6);
    CHECK(beta_coef(4, 4, 0) == 1);
}

TEST_CASE("evaluation matches Hermite forms") {
    std::mt19937_64 rng(1);
    const int M = 4;
    const Mat A = random_sym(rng, M);
    const Vec f = random_vec(rng, M);
    Kernel k1(1, M, std::vector<double>(f.data(), f.data() + M));
    const ChaosElement I1 = ChaosElement::integral(SymKernel(k1));
    const ChaosElement I2 = ChaosElement::integral(from_matrix(A));
    const ChaosElement I3 = ChaosElement::integral(basis_kernel(M, {0, 0, 0}));
    const ChaosEvaluator e1(I1), e2(I2), e3(I3);
    for (int t = 0; t < 20; ++t) {
        const Vec x = random_vec(rng, M);
        CHECK(e1(x) == doctest::Approx(f.dot(x)).epsilon(1e-12));
        CHECK(e2(x) == doctest::Approx(x.dot(A * x) - A.trace()).epsilon(1e-12));
        CHECK(e3(x) == doctest::Approx(hermite_he(3, x(0))).epsilon(1e-12));
        CHECK(evaluate(I2, x) == doctest::Approx(e2(x)).epsilon(1e-12));
    }
    CHECK(I2.variance() == doctest::Approx(2 * A.squaredNorm()));
    CHECK(I3.variance() == doctest::Approx(6.0));
}

TEST_CASE("product formula pointwise") {
    std::mt19937_64 rng(2);
    const int M = 3;
    const SymKernel f = from_matrix(random_sym(rng, M));
    const SymKernel g = symmetrize(Kernel(3, M, [&] {
        std::vector<double> v(27);
        for (auto& x : v) x = std::normal_distribution<double>()(rng);
        return v;
    }()));
    const ChaosElement F = ChaosElement::integral(f), G = ChaosElement::integral(g);
    const ChaosElement P = multiply(F, G, 5);
    for (int t = 0; t < 10; ++t) {
        const Vec x = random_vec(rng, M);
        CHECK(evaluate(P, x) == doctest::Approx(evaluate(F, x) * evaluate(G, x)).epsilon(1e-10));
    }
}

TEST_CASE("second chaos Gamma with its variance and cumulants") {
    std::mt19937_64 rng(3);
    const int M = 5;
    const Mat A1 = random_sym(rng, M), A2 = random_sym(rng, M);
    const ChaosVector F = ChaosVector::from_kernels({from_matrix(A1), from_matrix(A2)});
    const Mat C = chaos_covariance(F);
    CHECK(C(0, 1) == doctest::Approx(2 * (A1.array() * A2.array()).sum()));
    // Gamma_12 = 2 x^T A1 A2 x
    const ChaosElement G12 = gamma_ij(F, 0, 1);
    CHECK(G12.mean() == doctest::Approx(C(0, 1)));
    for (int t = 0; t < 5; ++t) {
        const Vec x = random_vec(rng, M);
        CHECK(evaluate(G12, x) == doctest::Approx(2 * x.dot(A1 * A2 * x)).epsilon(1e-10));
    }
    const double vg = 4 * ((A1 * A2 * A1 * A2).trace() + (A1 * A1 * A2 * A2).trace());
    CHECK(var_gamma(F, 0, 1) == doctest::Approx(vg).epsilon(1e-10));
    CHECK(var_gamma(F, 1, 0) == doctest::Approx(vg).epsilon(1e-10));
    // kappa_n(I_2(A)) = 2^{n-1} (n-1)! tr A^n
    for (int n = 2; n <= 4; ++n) {
        Mat An = A1;
        for (int k = 1; k < n; ++k) An = An * A1;
        const double want = std::pow(2.0, n - 1) * factorial(n - 1) * An.trace();
        const MultiIndex a(std::vector<int>{n, 0});
        CHECK(joint_cumulant(F, a) == doctest::Approx(want).epsilon(1e-10));
        CHECK(cumulant_second_chaos(F, a) == doctest::Approx(want).epsilon(1e-10));
    }
    CHECK(joint_cumulant(F, MultiIndex(std::vector<int>{1, 2})) ==
          doctest::Approx(8 * (A1 * A2 * A2).trace()).epsilon(1e-10));
    const ThirdPairing tp = third_cumulant_pairing(F, 0, 0, 1);
    CHECK(tp.admissible);
    CHECK(tp.r == 1);
    CHECK(tp.value == doctest::Approx((A1 * A1 * A2).trace()).epsilon(1e-10));
}

TEST_CASE("discrepancy and fourth-moment diagnostics") {
    std::mt19937_64 rng(4);
    const int M = 4;
    const Mat A = random_sym(rng, M);
    const ChaosVector F = ChaosVector::from_kernels({from_matrix(A)});
    const GaussianSpec Z(Mat::Constant(1, 1, 1.0));
    const DiscrepancyReport d = discrepancy(F, Z);
    CHECK(d.delta_gamma == doctest::Approx(std::sqrt(8 * (A * A * A * A).trace())).epsilon(1e-10));
    CHECK(d.delta_c == doctest::Approx(std::abs(2 * A.squaredNorm() - 1)).epsilon(1e-10));
    const auto rows = fourth_moment_diagnostics({F});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][0].kappa4 == doctest::Approx(48 * (A * A * A * A).trace()).epsilon(1e-10));
    REQUIRE(rows[0][0].contraction_norms.size() == 1);
    CHECK(rows[0][0].contraction_norms[0] == doctest::Approx((A * A).norm()).epsilon(1e-10));
    CHECK(rows[0][0].var_gamma == doctest::Approx(8 * (A * A * A * A).trace()).epsilon(1e-10));
}

TEST_CASE("first chaos has deterministic Gamma") {
    Kernel a(1, 2, {1.0, 0.0}), b(1, 2, {0.6, 0.8});
    const ChaosVector F = ChaosVector::from_kernels({SymKernel(a), SymKernel(b)});
    CHECK(var_gamma(F, 0, 1) == doctest::Approx(0.0));
    CHECK(gamma_ij(F, 0, 1).mean() == doctest::Approx(0.6));
    CHECK_THROWS_AS(rho_constants(F, 0, 1, 0), std::domain_error);
}

TEST_CASE("mixed-order Gamma has the right mean") {
    std::mt19937_64 rng(5);
    const int M = 3;
    std::vector<double> v(27);
    for (auto& x : v) x = std::normal_distribution<double>()(rng);
    const SymKernel f3 = symmetrize(Kernel(3, M, v));
    const SymKernel f2 = from_matrix(random_sym(rng, M));
    const ChaosVector F = ChaosVector::from_kernels({f3, f3, f2});
    CHECK(gamma_ij(F, 0, 1).mean() == doctest::Approx(6 * f3.norm2()).epsilon(1e-10));
    CHECK(gamma_ij(F, 0, 2).mean() == doctest::Approx(0.0).epsilon(1e-12));
    // Gamma_ij and Gamma_ji share their mean
    CHECK(gamma_ij(F, 2, 0).mean() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("vectors reject mismatched dimensions") {
    ChaosElement a = ChaosElement::integral(from_matrix(Mat::Identity(2, 2)));
    ChaosElement b = ChaosElement::integral(from_matrix(Mat::Identity(3, 3)));
    CHECK_THROWS(ChaosVector({a, b}));
}
