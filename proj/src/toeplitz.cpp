#include "chaoslab/toeplitz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

namespace chaoslab {

namespace {
constexpr double kPi = std::numbers::pi;
}

EvenFunction EvenFunction::gaussian(double w) {
    if (!(w > 0)) throw std::invalid_argument("gaussian width must be positive");
    return {"gaussian", [w](double x) { return std::exp(-x * x / (2 * w * w)); },
            [w](double t) { return std::sqrt(2 * kPi) * w * std::exp(-w * w * t * t / 2); }};
}

EvenFunction EvenFunction::cauchy(double w) {
    if (!(w > 0)) throw std::invalid_argument("cauchy width must be positive");
    return {"cauchy", [w](double x) { return 1.0 / (1.0 + x * x / (w * w)); },
            [w](double t) { return kPi * w * std::exp(-w * std::abs(t)); }};
}

EvenFunction EvenFunction::exponential(double a) {
    if (!(a > 0)) throw std::invalid_argument("exponential rate must be positive");
    return {"exponential", [a](double x) { return std::exp(-a * std::abs(x)); },
            [a](double t) { return 2 * a / (a * a + t * t); }};
}

EvenFunction EvenFunction::zero() {
    return {"zero", [](double) { return 0.0; }, [](double) { return 0.0; }};
}

EvenFunction EvenFunction::custom(std::string name, std::function<double(double)> value) {
    auto ft = [value](double t) {
        if (t == 0.0) {
            boost::math::quadrature::exp_sinh<double> es;
            return 2 * es.integrate(value, 0.0, std::numeric_limits<double>::infinity());
        }
        static thread_local boost::math::quadrature::ooura_fourier_cos<double> oc;
        return 2 * oc.integrate(value, std::abs(t)).first;
    };
    return {std::move(name), value, ft};
}

EvenFunction EvenFunction::by_name(const std::string& name, double p) {
    if (name == "gaussian") return gaussian(p);
    if (name == "cauchy") return cauchy(p);
    if (name == "exponential") return exponential(p);
    if (name == "zero") return zero();
    throw std::invalid_argument("unknown even function '" + name + "' (gaussian|cauchy|exponential|zero)");
}

void ToeplitzSpec::validate() const {
    if (!(T > 0) || !(step > 0) || step > T) throw std::invalid_argument("toeplitz: need 0 < step <= T");
    if (!f.value || !f.fourier) throw std::invalid_argument("toeplitz: spectral density missing");
    if (h.empty()) throw std::invalid_argument("toeplitz: need at least one test function");
    for (double x : {0.0, 0.3, 1.0, 2.7, 10.0}) {
        const double fx = f.value(x);
        if (fx < 0) throw std::invalid_argument("toeplitz: spectral density must be nonnegative");
        if (std::abs(fx - f.value(-x)) > 1e-12 * (1 + std::abs(fx)))
            throw std::invalid_argument("toeplitz: spectral density is not even");
        for (const auto& hi : h)
            if (std::abs(hi.value(x) - hi.value(-x)) > 1e-12 * (1 + std::abs(hi.value(x))))
                throw std::invalid_argument("toeplitz: test function '" + hi.name + "' is not even");
    }
}

Mat toeplitz_operator(const EvenFunction& psi, double T, double step) {
    const int n = static_cast<int>(std::llround(T / step));
    if (n < 1) throw std::invalid_argument("toeplitz_operator: empty grid");
    checked_size(2, n, "toeplitz operator");
    std::vector<double> col(n);
    for (int k = 0; k < n; ++k) col[k] = step * psi.fourier(k * step);
    Mat B(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) B(a, b) = col[std::abs(a - b)];
    return B;
}

namespace {

double trace_product(const Mat& Bf, const std::vector<Mat>& Bh, const std::vector<int>& order) {
    Mat P = Bf * Bh[order[0]];
    for (std::size_t k = 1; k < order.size(); ++k) P = (P * Bf) * Bh[order[k]];
    return P.trace();
}

struct Eval {
    double as_written, lo, hi;
};

Eval evaluate_at(const ToeplitzSpec& spec, const std::vector<int>& lab, double step) {
    const Mat Bf = toeplitz_operator(spec.f, spec.T, step);
    std::vector<Mat> Bh;
    for (const auto& h : spec.h) Bh.push_back(toeplitz_operator(h, spec.T, step));
    const int n = static_cast<int>(lab.size());
    const double pref = std::pow(spec.T, -n / 2.0) * std::pow(2.0, n - 1) * factorial(n - 1);
    Eval e;
    e.as_written = pref * trace_product(Bf, Bh, lab);
    e.lo = e.hi = e.as_written;
    std::vector<int> p = lab;
    std::sort(p.begin(), p.end());
    do {
        const double v = pref * trace_product(Bf, Bh, p);
        e.lo = std::min(e.lo, v);
        e.hi = std::max(e.hi, v);
    } while (std::next_permutation(p.begin(), p.end()));
    return e;
}

}  // namespace

ToeplitzCumulant toeplitz_cumulant(const ToeplitzSpec& spec, const MultiIndex& alpha) {
    spec.validate();
    if (alpha.dim() != static_cast<int>(spec.h.size()))
        throw std::invalid_argument("toeplitz_cumulant: multi-index dimension mismatch");
    const int n = alpha.order();
    if (n < 1 || n > 4) throw std::invalid_argument("toeplitz_cumulant: 1 <= |alpha| <= 4");
    if (n == 1) return {};  // centered
    const std::vector<int> lab = alpha.labels();
    const Eval coarse = evaluate_at(spec, lab, spec.step);
    const Eval fine = evaluate_at(spec, lab, spec.step / 2);
    const double scale = std::max(std::abs(fine.as_written), std::abs(coarse.as_written));
    if (scale > 1e-300 && std::abs(fine.as_written - coarse.as_written) > 0.05 * scale)
        throw std::runtime_error("toeplitz_cumulant: grid too coarse (step " + std::to_string(spec.step) +
                                 " and step/2 disagree by more than 5%)");
    ToeplitzCumulant c;
    c.value = coarse.as_written;
    c.value_half = fine.as_written;
    c.min_order = coarse.lo;
    c.max_order = coarse.hi;
    return c;
}

double toeplitz_limit(const ToeplitzSpec& spec, const MultiIndex& alpha) {
    spec.validate();
    const int n = alpha.order();
    if (n < 2) return 0.0;
    const std::vector<int> lab = alpha.labels();
    auto integrand = [&](double x) {
        double v = std::pow(spec.f.value(x), n);
        for (int i : lab) v *= spec.h[i].value(x);
        return v;
    };
    boost::math::quadrature::exp_sinh<double> es;
    const double integral = 2 * es.integrate(integrand, 0.0, std::numeric_limits<double>::infinity());
    return std::pow(2.0, n - 1) * factorial(n - 1) * std::pow(2 * kPi, 2 * n - 1) * integral;
}

}  // namespace chaoslab
