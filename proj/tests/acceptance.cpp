// One PASS/FAIL line per criterion. `acceptance --criterion n --dir d` runs a single one.
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "chaoslab/breuer.hpp"
#include "chaoslab/chaos.hpp"
#include "chaoslab/edgeworth.hpp"
#include "chaoslab/io.hpp"
#include "chaoslab/majorizing.hpp"
#include "chaoslab/mc.hpp"
#include "chaoslab/second_chaos_matrix.hpp"
#include "chaoslab/sheet.hpp"

using namespace chaoslab;

namespace {

std::string g_dir = ".";
int g_threads = 0;

struct Outcome {
    bool pass = false;
    std::string detail;
    std::vector<std::string> notes;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

SymKernel random_sym(std::mt19937_64& rng, int q, int M) {
    std::normal_distribution<double> nd;
    Kernel k(q, M);
    for (auto& v : k.coeffs()) v = nd(rng);
    return symmetrize(k);
}

Mat random_sym_matrix(std::mt19937_64& rng, int N) {
    std::normal_distribution<double> nd;
    Mat A(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = nd(rng);
    return A;
}

// |f (x)_r g|^2 by plain loops over (free f, free g, shared) index tuples
double brute_contraction_norm2(const Kernel& f, const Kernel& g, int r) {
    const int M = f.dim(), a = f.order() - r, b = g.order() - r;
    auto idx = [M](std::size_t flat, int len) {
        std::vector<int> v(len);
        for (int t = len - 1; t >= 0; --t) {
            v[t] = static_cast<int>(flat % M);
            flat /= M;
        }
        return v;
    };
    const std::size_t na = ipow(M, a), nb = ipow(M, b), ns = ipow(M, r);
    double total = 0;
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < ns; ++k) {
                auto fi = idx(i, a), gi = idx(j, b), ki = idx(k, r);
                fi.insert(fi.end(), ki.begin(), ki.end());
                gi.insert(gi.end(), ki.begin(), ki.end());
                s += f.at(fi) * g.at(gi);
            }
            total += s * s;
        }
    return total;
}

// ------------------------------------------------------------------ criteria

Outcome c1() {
    Mat A(2, 2), B(2, 2);
    A << 1, 0, 0, -1;
    B << 0, 1, 1, 0;
    // by hand: (AB)_{ij} and (AB + BA)
    double plain = 0, sym = 0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double ab = 0, ba = 0;
            for (int k = 0; k < 2; ++k) ab += A(i, k) * B(k, j), ba += B(i, k) * A(k, j);
            plain += ab * ab / 4.0 / 4.0;                      // (AB/N)^2 / N^2
            sym += (ab + ba) * (ab + ba) / 16.0 / 4.0;         // ((AB+BA)/2N)^2 / N^2
        }
    StepKernelMatrix SA(A), SB(B);
    MContraction mc = m_contract(SA, SB);
    const double m_plain = m_norm2(mc.contraction, 2), m_sym = m_norm2(mc.symmetrized, 2);
    const SymKernel f = SA.to_kernel(), g = SB.to_kernel();
    const double t_plain = contract(f, g, 1).norm2(), t_sym = sym_contract(f, g, 1).norm2();
    double err = 0;
    for (double v : {plain, m_plain, t_plain}) err = std::max(err, std::abs(v - 0.125));
    for (double v : {sym, m_sym, t_sym}) err = std::max(err, std::abs(v));
    return {err <= 1e-12, fmt("|f x1 g|^2 = %.15g (matrix) %.15g (tensor), |f ~x1 g|^2 = %.3g / %.3g; max err %.2e",
                              m_plain, t_plain, m_sym, t_sym, err)};
}

Outcome c2() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> Md(2, 8);
    double worst = 0, printed_ratio = 0;
    for (int n = 0; n < 100; ++n) {
        const int M = Md(rng);
        const Mat A1 = random_sym_matrix(rng, M), A2 = random_sym_matrix(rng, M);
        const SymKernel f1 = from_matrix(A1), f2 = from_matrix(A2);
        ChaosVector F = ChaosVector::from_kernels({f1, f2});
        const double eq59 = 8 * inner(sym_contract(f1, f1, 1), f2);
        // general permutation formula for each labelling of the decomposition {1,1,2}
        const std::vector<std::vector<int>> labellings{{0, 0, 1}, {0, 1, 0}, {1, 0, 0}};
        const SymKernel* fk[] = {&f1, &f2};
        double spread = 0;
        for (const auto& lab : labellings) {
            double s = 0;
            for (auto perm : std::vector<std::vector<int>>{{1, 2}, {2, 1}})
                s += inner(sym_contract(*fk[lab[0]], *fk[lab[perm[0]]], 1), *fk[lab[perm[1]]]);
            spread = std::max(spread, std::abs(4 * s - eq59));
        }
        const double lib = joint_cumulant(F, MultiIndex(std::vector<int>{2, 1}));
        const double trace = 8 * (A1 * A1 * A2).trace();  // kappa(Q1,Q1,Q2) for xi^T A xi
        const double scale = 1 + std::abs(trace);
        worst = std::max({worst, spread / scale, std::abs(lib - eq59) / scale, std::abs(trace - eq59) / scale});
        const double eq63_printed = 8 * (inner(sym_contract(f1, f2, 1), f1) + inner(sym_contract(f2, f1, 1), f1));
        printed_ratio = eq63_printed / eq59;
    }
    Outcome o{worst <= 1e-10, fmt("100 instances, max relative disagreement %.2e (labellings, fold path, trace)", worst)};
    o.notes.push_back(fmt("the two-term right side as printed is %.6g times the one-term form; each labelling of the "
                          "general formula carries 2^{n-1} = 4, not 8",
                          printed_ratio));
    return o;
}

Outcome c3() {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> Nd(2, 16);
    int violations = 0, below_inv_n = 0;
    double min_ratio = 1e300, max_dev = 0;
    int min_N = 0;
    for (int n = 0; n < 1000; ++n) {
        const int N = Nd(rng);
        const Mat A = random_sym_matrix(rng, N);
        const RatioResult r = ratio_bound(StepKernelMatrix(A));
        Eigen::SelfAdjointEigenSolver<Mat> es(A);
        const Vec l4 = es.eigenvalues().array().pow(4);
        const double oracle = l4.array().square().sum() / (l4.sum() * l4.sum());
        max_dev = std::max({max_dev, std::abs(oracle - r.ratio), std::abs(r.kappa_ratio - r.ratio)});
        if (r.ratio < 0.5 - 1e-12) ++violations;
        if (r.ratio < 1.0 / N - 1e-12) ++below_inv_n;
        if (r.ratio < min_ratio) min_ratio = r.ratio, min_N = N;
    }
    Outcome o{violations == 0 && max_dev <= 1e-10,
              fmt("%d of 1000 matrices violate ratio >= 1/2 (min ratio %.4f at N=%d); trace/eigen/cumulant forms agree "
                  "to %.1e",
                  violations, min_ratio, min_N, max_dev)};
    o.notes.push_back("ratio = sum l^8 / (sum l^4)^2 >= 1/rank, which is 1/N for the identity; the 1/2 bound holds only "
                      "for rank <= 2");
    o.notes.push_back(fmt("ratio >= 1/N: %d of 1000 below", below_inv_n));
    return o;
}

Outcome c4() {
    std::mt19937_64 rng(4);
    double worst = 0;
    std::string detail;
    for (int rep = 0; rep < 3; ++rep) {
        const StepKernelMatrix A(random_sym_matrix(rng, 4));
        const ChaosElement F = ChaosElement::integral(A.to_kernel());
        const ChaosEvaluator ev(F);
        MCConfig mc;
        mc.samples = 1000000;
        mc.seed = 40 + rep;
        mc.threads = g_threads;
        const Mat x = collect_mc_gaussian(mc, 4, 1, [&](const double* xi, double* out) { out[0] = ev(xi); });
        const CumulantSet k = sample_cumulants(x, 4);
        for (int m : {3, 4}) {
            const MultiIndex a(std::vector<int>{m});
            const double exact = trace_cumulant(A, m);
            const double z = std::abs(k.get(a) - exact) / k.se.at(a);
            worst = std::max(worst, z);
            detail += fmt(" k%d %.4f vs %.4f (%.1f SE);", m, exact, k.get(a), z);
        }
    }
    return {worst <= 4, fmt("max deviation %.2f SE;%s", worst, detail.c_str())};
}

Outcome c5() {
    std::mt19937_64 rng(5);
    const int M = 6;
    std::vector<SymKernel> f, g;
    for (int q = 1; q <= 3; ++q) f.push_back(random_sym(rng, q, M)), g.push_back(random_sym(rng, q, M));
    std::vector<ChaosEvaluator> ef, eg;
    for (int q = 0; q < 3; ++q) ef.emplace_back(ChaosElement::integral(f[q])), eg.emplace_back(ChaosElement::integral(g[q]));
    MCConfig mc;
    mc.samples = 1000000;
    mc.seed = 5;
    mc.threads = g_threads;
    // products I_p(f) I_q(g) for p, q = 1..3
    StatAccumulator acc = run_mc_gaussian(mc, M, 9, [&](const double* xi, double* out) {
        double a[3], b[3];
        for (int q = 0; q < 3; ++q) a[q] = ef[q](xi), b[q] = eg[q](xi);
        for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q) out[3 * p + q] = a[p] * b[q];
    });
    double worst = 0;
    std::string detail;
    for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) {
            double exact = 0;
            if (p == q) {
                for (std::size_t i = 0; i < f[p].size(); ++i) exact += f[p][i] * g[q][i];
                exact *= factorial(p + 1);
            }
            const double z = std::abs(acc.mean()(3 * p + q) - exact) / acc.se(3 * p + q);
            worst = std::max(worst, z);
            if (p == q) detail += fmt(" q=%d: %.4f vs %.4f;", p + 1, exact, acc.mean()(3 * p + q));
        }
    return {worst <= 4, fmt("max deviation %.2f SE over 9 order pairs;%s", worst, detail.c_str())};
}

Outcome c6() {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> Md(2, 6);
    const std::vector<std::pair<int, int>> pairs{{1, 3}, {2, 2}, {2, 3}, {3, 3}};
    std::uniform_int_distribution<int> pd(0, static_cast<int>(pairs.size()) - 1);
    int failures = 0, checks = 0;
    double eq_dev = 0, excess = -1e300, order_dev = 0;
    for (int n = 0; n < 200; ++n) {
        const auto [qi, qj] = pairs[pd(rng)];
        const int M = Md(rng);
        const SymKernel fi = random_sym(rng, qi, M), fj = random_sym(rng, qj, M);
        for (int r = 1; r <= std::min(qi, qj) - (qi == qj ? 1 : 0); ++r)
            for (int s = 1; s <= qi + qj - 2 * r - 1; ++s) {
                ++checks;
                if (!majorizing_bound_check(fi, fj, r, s).found) ++failures;
            }
        for (const SymKernel* f : {&fi, &fj}) {
            const int q = f->order();
            for (int r = 1; r < q; ++r) {
                const double c4 = std::pow(brute_contraction_norm2(*f, *f, r), 2);
                for (int m = 0; m <= q - r; ++m) {
                    const double v = majorizing_integral({*f, r, m});
                    const double w = majorizing_integral({*f, r, m}, EliminationOrder::ColumnsFirst);
                    order_dev = std::max(order_dev, std::abs(v - w) / (1 + std::abs(v)));
                    excess = std::max(excess, (v - c4) / (1 + c4));
                    if (m == 0 || m == q - r) eq_dev = std::max(eq_dev, std::abs(v - c4) / (1 + c4));
                }
            }
        }
    }
    const bool ok = failures == 0 && excess <= 1e-10 && eq_dev <= 1e-10 && order_dev <= 1e-10;
    return {ok, fmt("%d/%d (r,s) checks without a valid splitting; max (M - |f x_r f|^4) %.2e, endpoint equality "
                    "dev %.2e, elimination-order dev %.2e",
                    failures, checks, excess, eq_dev, order_dev)};
}

Outcome c7() {
    double worst = 0;
    int count = 0;
    for (int k = 1; k <= 3; ++k)
        for (int mask = 0; mask < (1 << k); ++mask) {
            std::vector<double> e;
            for (int i = 0; i < k; ++i) e.push_back(mask >> i & 1 ? 0.1 : 0.5);
            const double c = sheet_constant(e, SheetMode::Closed), q = sheet_constant(e, SheetMode::Quadrature);
            worst = std::max(worst, std::abs(c - q) / std::abs(q));
            ++count;
        }
    return {worst <= 1e-6, fmt("%d argument tuples, max relative error %.2e", count, worst)};
}

constexpr double kXi = 1.0, kZeta = 0.5;

Outcome c8() {
    Vec a(2);
    a << 1, 1;
    const TestFunction g = TestFunction::trig(a, -std::numbers::pi / 2);  // sin(x1 + x2)
    MCConfig mc;
    mc.samples = 1000000;
    mc.seed = 8;
    mc.threads = g_threads;
    const std::vector<double> scales{0.4, 0.2, 0.1, 0.05};
    const SheetReport rep = sheet_rates(1, {kXi, kZeta}, scales, g, mc);
    write_text_file(g_dir + "/sheet_rates.csv", rep.table.to_csv());
    std::vector<double> ratio, se;
    std::string detail;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        ratio.push_back(std::abs(rep.results[i].ratio));
        se.push_back(rep.results[i].ratio_se);
        detail += fmt(" %.3g:%.4f(%.4f)", scales[i], rep.results[i].ratio, rep.results[i].ratio_se);
    }
    bool mono = true;
    for (std::size_t i = 1; i < ratio.size(); ++i)
        mono = mono && ratio[i] <= ratio[i - 1] + 2 * std::hypot(se[i], se[i - 1]);
    const double final_over_first = ratio.back() / ratio.front();
    Outcome o{mono && final_over_first < 1.0 / 3,
              fmt("|E g - E_3|/sqrt(sum eps):%s; monotone within 2 SE: %s; final/first %.3f (needs < 1/3)",
                  detail.c_str(), mono ? "yes" : "no", final_over_first)};
    o.notes.push_back("the ratio shrinks like sqrt(eps) at best, and sqrt(0.05/0.4) = 0.354 > 1/3; see README");
    return o;
}

Outcome c9() {
    Vec a(1);
    a << 1;
    const TestFunction g = TestFunction::trig(a, -std::numbers::pi / 2);
    MCConfig mc;
    mc.samples = 1000000;
    mc.seed = 7;
    mc.threads = g_threads;
    BreuerMajorSpec spec;
    spec.H = 0.3;
    spec.orders = {2};
    const BreuerReport rep = breuer_experiment(spec, {64, 128, 256, 512, 1024}, g, mc);
    write_text_file(g_dir + "/breuer_rates.csv", rep.table.to_csv());
    // covariance oracle: direct double sum
    double cov_dev = 0;
    for (const auto& s : rep.scales) {
        const int T = s.T;
        double sum = 0;
        for (int u = 0; u < T; ++u)
            for (int v = 0; v < T; ++v) {
                const double t = std::abs(u - v);
                const double rho = 0.5 * (std::pow(t + 1, 0.6) + std::pow(std::abs(t - 1), 0.6) - 2 * std::pow(t, 0.6));
                sum += rho * rho;
            }
        cov_dev = std::max(cov_dev, std::abs(2 * sum / T - s.covariance(0, 0)));
    }
    const Slope sg = rate_fit(rep.table, &RateRow::delta_gamma), sc = rate_fit(rep.table, &RateRow::delta_c);
    const double want_c = 1 + 2 * (spec.H - 1) * 2;
    const bool ok_g = std::abs(sg.slope + 0.5) <= 0.1, ok_c = std::abs(sc.slope - want_c) <= 0.15;
    Outcome o{ok_g && ok_c && cov_dev <= 1e-10,
              fmt("slope Delta_Gamma %.4f (+-%.4f) [%s]; slope Delta_C %.4f (+-%.4f), expected %.2f [%s]; covariance "
                  "oracle dev %.1e",
                  sg.slope, sg.se, ok_g ? "ok" : "off", sc.slope, sc.se, want_c, ok_c ? "ok" : "off", cov_dev)};
    o.notes.push_back("C_T - C = -(2/T) sum_k |k| rho(k)^2 - 2 sum_{|k|>=T} rho(k)^2; the first sum converges for "
                      "H < 3/4, so Delta_C ~ 1/T");
    return o;
}

Outcome c10() {
    std::mt19937_64 rng(10);
    const int M = 3;
    SymKernel f1 = random_sym(rng, 2, M), f2 = random_sym(rng, 2, M);
    f1 *= 1 / std::sqrt(2 * f1.norm2());
    f2 *= 1 / std::sqrt(2 * f2.norm2());
    const ChaosVector F = ChaosVector::from_kernels({f1, f2});
    const GaussianSpec C(chaos_covariance(F));
    Vec a(2);
    a << 0.8, -0.6;
    const TestFunction g = TestFunction::trig(a, 0.3);
    MCConfig mc;
    mc.samples = 1000000;
    mc.seed = 10;
    mc.threads = g_threads;
    UOptions opt;
    opt.s_nodes = 24;
    const SteinCheck s = stein_identity_check(F, g, C, mc, opt);
    const double z = std::abs(s.lhs.mean - s.rhs.mean) / s.combined_se;
    return {z <= 3, fmt("E g(F) - E g(Z) = %.5f (%.5f), sum E[d_ij U (Gamma_ij - C_ij)] = %.5f (%.5f); %.2f combined SE",
                        s.lhs.mean, s.lhs.se, s.rhs.mean, s.rhs.se, z)};
}

Outcome c11() {
    double worst = 0;
    int checks = 0;
    Mat c2(2, 2);
    c2 << 1.3, 0.4, 0.4, 0.8;
    const std::vector<GaussianSpec> covs{GaussianSpec(Mat::Constant(1, 1, 1.7)), GaussianSpec(c2)};
    for (const auto& Z : covs) {
        const int d = Z.d();
        const Vec mu = Vec::Zero(d);
        std::vector<MultiIndex> all;
        for (int n = 0; n <= 3; ++n)
            for (const auto& al : multi_indices(d, n)) all.push_back(al);
        // orthogonality of distinct orders
        for (const auto& al : all)
            for (const auto& be : all) {
                if (al.order() == be.order()) continue;
                const double v = gauss_expect(
                    [&](const Vec& x) { return hermite(al, x, mu, Z) * hermite(be, x, mu, Z); }, Z);
                worst = std::max(worst, std::abs(v));
                ++checks;
            }
        Vec w(d);
        for (int i = 0; i < d; ++i) w(i) = 0.7 - 0.5 * i;
        const std::vector<TestFunction> gs{TestFunction::trig(w, 0.2),
                                           TestFunction::damped_monomial(MultiIndex::unit(d, 0))};
        for (const auto& g : gs)
            for (int i = 0; i < d; ++i) {
                for (const auto& al : all) {
                    if (al.order() > 2) continue;  // alpha + e_i stays within order 3
                    auto [l, r] = ibp_hermite(g, i, al, Z);
                    worst = std::max(worst, std::abs(l - r));
                    ++checks;
                }
                auto [l, r] = ibp_covariance(g, i, Z);
                worst = std::max(worst, std::abs(l - r));
                ++checks;
            }
    }
    return {worst <= 1e-7, fmt("%d quadrature identities, max abs error %.2e", checks, worst)};
}

Outcome c12() {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd;
    Mat cm(2, 2);
    cm << 1.0, 0.3, 0.3, 0.6;
    const GaussianSpec C(cm);
    Vec a(2);
    a << 1.1, -0.7;
    const TestFunction g = TestFunction::trig(a, 0.4);
    std::vector<MultiIndex> alphas;
    for (int n = 1; n <= 3; ++n)
        for (const auto& al : multi_indices(2, n)) alphas.push_back(al);
    // bound: |d_a U| <= |d_a g|_inf / |a| with |d_a g|_inf = |a^alpha| for the cosine
    double bound_excess = -1e300;
    for (int p = 0; p < 100; ++p) {
        Vec x(2);
        x << 2 * nd(rng), 2 * nd(rng);
        for (const auto& al : alphas) {
            double sup = 1;
            for (int i = 0; i < 2; ++i) sup *= std::pow(std::abs(a(i)), al[i]);
            bound_excess = std::max(bound_excess, std::abs(u_transform(g, C, x, al)) - sup / al.order());
        }
    }
    // E[d_a U(Z)] = E[d_a g(Z)] / |a|, also for a function without a closed-form smoothing
    double id_err = 0;
    const TestFunction h = TestFunction::damped_monomial(MultiIndex(std::vector<int>{1, 1}));
    for (const TestFunction* fn : {&g, &h})
        for (const auto& al : alphas) {
            const double lhs = gauss_expect([&](const Vec& x) { return u_transform(*fn, C, x, al); }, C, 20);
            const double rhs = gaussian_expectation(*fn, al, C) / al.order();
            id_err = std::max(id_err, std::abs(lhs - rhs));
        }
    double res = 0;
    for (int p = 0; p < 10; ++p) {
        Vec x(2);
        x << nd(rng), nd(rng);
        res = std::max({res, std::abs(stein_residual(g, C, x)), std::abs(stein_residual(h, C, x))});
    }
    const bool ok = bound_excess <= 1e-12 && id_err <= 1e-6 && res < 1e-5;
    Outcome o{ok, fmt("bound slack min %.2e over 100 points; E[d U(Z)] identity err %.2e; Stein residual %.2e "
                      "(calibrated sign %+d)",
                      -bound_excess, id_err, res, stein_sign())};
    o.notes.push_back("U is taken with the sign that makes the derivative formula hold; the Stein equation then reads "
                      "<C, Hess U> - <x, grad U> = -(g - E g(Z))");
    return o;
}

Outcome c13() {
    // exact sheet family: kappa_4, |f x_1 f|^2 and Var Gamma_11 of the normalized functional
    std::vector<double> eps;
    for (double e = 1.0; e >= 1e-4 * 0.99; e /= 2) eps.push_back(e);
    std::vector<std::array<double, 3>> rows;
    for (double e : eps) {
        const double c2 = sheet_constant({e, e}), c4 = sheet_constant({e, e, e, e});
        const double contr = c4 / std::pow(2 * c2, 2);
        rows.push_back({sheet_cumulant({1, {e}}, MultiIndex(std::vector<int>{4})), contr, 8 * contr});
    }
    bool mono = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
        for (int c = 0; c < 3; ++c) mono = mono && rows[i][c] < rows[i - 1][c];
    double final_rel = 0;
    for (int c = 0; c < 3; ++c) final_rel = std::max(final_rel, rows.back()[c] / rows.front()[c]);
    // the library diagnostics on grid kernels agree with the closed forms
    double grid_dev = 0;
    std::vector<ChaosVector> seq;
    std::vector<double> grid_eps{0.8, 0.4, 0.2};
    for (double e : grid_eps) {
        SheetGrid grid;
        grid.h = 0.25;
        seq.push_back(sheet_kernels(sheet_discretize({1, {e}}, grid)));
    }
    const auto diag = fourth_moment_diagnostics(seq);
    bool grid_mono = true;
    for (std::size_t i = 0; i < grid_eps.size(); ++i) {
        const double e = grid_eps[i];
        const double c2 = sheet_constant({e, e}), c4 = sheet_constant({e, e, e, e});
        const double k4 = 48 * c4 / std::pow(2 * c2, 2);
        const auto& row = diag[i][0];
        grid_dev = std::max({grid_dev, std::abs(row.kappa4 / k4 - 1),
                             std::abs(row.var_gamma / (k4 / 6) - 1),
                             std::abs(std::pow(row.contraction_norms[0], 2) / (k4 / 48) - 1)});
        if (i > 0) grid_mono = grid_mono && row.kappa4 < diag[i - 1][0].kappa4 &&
                               row.var_gamma < diag[i - 1][0].var_gamma &&
                               row.contraction_norms[0] < diag[i - 1][0].contraction_norms[0];
    }
    const bool ok = mono && final_rel < 1e-3 && grid_mono && grid_dev < 0.05;
    return {ok, fmt("eps 1 -> %.1e: monotone %s, final/initial max %.2e; grid kernels (eps 0.8..0.2) monotone %s, "
                    "max rel dev from closed form %.3f",
                    eps.back(), mono ? "yes" : "no", final_rel, grid_mono ? "yes" : "no", grid_dev)};
}

Outcome c14() {
    auto load = [](const std::string& name) {
        std::ifstream in(g_dir + "/" + name);
        if (!in) throw std::runtime_error("missing " + g_dir + "/" + name + " (run criteria 8 and 9 first)");
        std::stringstream ss;
        ss << in.rdbuf();
        return RateTable::from_csv(ss.str());
    };
    int rows = 0, bad = 0;
    std::string detail;
    for (const char* name : {"sheet_rates.csv", "breuer_rates.csv"}) {
        const RateTable t = load(name);
        for (const auto& r : t.rows) {
            ++rows;
            const double se = std::max(r.raw_gap_se, r.corrected_gap_se);
            if (!(std::abs(r.corrected_gap) <= std::abs(r.raw_gap) + 2 * se)) ++bad;
        }
        detail += fmt(" %s: %zu rows;", name, t.rows.size());
    }
    return {bad == 0 && rows > 0, fmt("%d of %d rows with |corrected| > |raw| + 2 SE;%s", bad, rows, detail.c_str())};
}

const std::vector<std::pair<const char*, std::function<Outcome()>>> kCriteria{
    {"remark: symmetrization kills the contraction", c1},
    {"third cumulant relabeling", c2},
    {"eigenvalue ratio bound >= 1/2", c3},
    {"trace cumulants vs sampling", c4},
    {"isometry and orthogonality", c5},
    {"majorizing lemma", c6},
    {"sheet constants closed vs quadrature", c7},
    {"sheet rate", c8},
    {"Breuer-Major rates", c9},
    {"Stein identity", c10},
    {"Hermite orthogonality and integration by parts", c11},
    {"U-transform contract", c12},
    {"fourth-moment coherence along the sheet family", c13},
    {"Edgeworth improvement", c14},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run one criterion (1-14); default all")->check(CLI::Range(0, 14));
    app.add_option("--dir", g_dir, "directory for rate tables");
    app.add_option("--threads", g_threads, "worker threads");
    CLI11_PARSE(app, argc, argv);
    int failed = 0;
    for (std::size_t i = 0; i < kCriteria.size(); ++i) {
        if (only && static_cast<int>(i) + 1 != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = kCriteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, kCriteria[i].first, o.detail.c_str(),
                    secs);
        for (const auto& n : o.notes) std::printf("     note: %s\n", n.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
