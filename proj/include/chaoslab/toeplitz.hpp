#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chaoslab/multiindex.hpp"
#include "chaoslab/tensor.hpp"

namespace chaoslab {

// Even function with its Fourier transform psi^(t) = int e^{ixt} psi(x) dx.
struct EvenFunction {
    std::string name;
    std::function<double(double)> value;
    std::function<double(double)> fourier;

    static EvenFunction gaussian(double width = 1.0);     // e^{-x^2/(2w^2)}
    static EvenFunction cauchy(double width = 1.0);       // 1/(1+(x/w)^2)
    static EvenFunction exponential(double rate = 1.0);   // e^{-rate |x|}
    static EvenFunction zero();
    // transform by oscillatory quadrature
    static EvenFunction custom(std::string name, std::function<double(double)> value);
    static EvenFunction by_name(const std::string& name, double param = 1.0);
};

struct ToeplitzSpec {
    EvenFunction f;               // spectral density, f >= 0
    std::vector<EvenFunction> h;  // one per component
    double T = 32;
    double step = 0.25;
    void validate() const;
};

// B_T(psi) on the midpoint grid of [0,T]: entries step * psi^(t_a - t_b)
Mat toeplitz_operator(const EvenFunction& psi, double T, double step);

struct ToeplitzCumulant {
    double value = 0;        // as-written ordering (labels ascending)
    double value_half = 0;   // same at step/2
    double min_order = 0, max_order = 0;  // over all orderings of the h factors
    double spread() const { return max_order - min_order; }
};
// T^{-n/2} 2^{n-1} (n-1)! tr[prod_k B(f) B(h_{l_k})]; throws if step and step/2 differ by > 5%.
ToeplitzCumulant toeplitz_cumulant(const ToeplitzSpec& spec, const MultiIndex& alpha);

// lim T^{n/2-1} kappa_alpha = 2^{n-1} (n-1)! (2 pi)^{2n-1} int f^n prod h_{l_k}
double toeplitz_limit(const ToeplitzSpec& spec, const MultiIndex& alpha);

}  // namespace chaoslab
