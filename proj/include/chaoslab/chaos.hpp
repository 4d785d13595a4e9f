#pragma once

#include <map>
#include <vector>

#include "chaoslab/hermite_stein.hpp"
#include "chaoslab/multiindex.hpp"
#include "chaoslab/tensor.hpp"

namespace chaoslab {

// beta_{a,b}(r) = r! C(a,r) C(b,r)
double beta_coef(int a, int b, int r);

// constant + sum_q I_q(f_q) over a finite Gaussian basis of size dim
struct ChaosElement {
    int dim = 1;
    double constant = 0.0;
    std::map<int, SymKernel> terms;

    ChaosElement() = default;
    explicit ChaosElement(int d, double c = 0.0) : dim(d), constant(c) {}
    static ChaosElement integral(SymKernel f);

    // accumulate into the order-q slot (order 0 goes to the constant)
    void add(const SymKernel& f);
    bool pure() const { return constant == 0.0 && terms.size() == 1; }
    int top_order() const { return terms.empty() ? 0 : terms.rbegin()->first; }
    const SymKernel& kernel() const;  // the single kernel of a pure element
    int order() const;                 // order of a pure element

    double mean() const { return constant; }
    double variance() const;
    double second_moment() const { return constant * constant + variance(); }

    ChaosElement& operator+=(const ChaosElement& o);
    ChaosElement& operator*=(double s);
};

struct ChaosVector {
    int dim = 1;
    std::vector<ChaosElement> components;

    ChaosVector() = default;
    explicit ChaosVector(std::vector<ChaosElement> comps);
    static ChaosVector from_kernels(const std::vector<SymKernel>& kernels);

    int d() const { return static_cast<int>(components.size()); }
    bool pure() const;
    std::vector<int> orders() const;  // pure vectors only
    const ChaosElement& operator[](int i) const { return components.at(i); }
};

// Fast repeated evaluation at Gaussian samples.
class ChaosEvaluator {
public:
    explicit ChaosEvaluator(const ChaosElement& F);
    double operator()(const double* xi) const;
    double operator()(const Vec& xi) const;
    int dim() const { return dim_; }

private:
    struct Entry {
        std::vector<std::pair<int, int>> slots;  // (coordinate, multiplicity)
        double weight;
    };
    int dim_;
    int qmax_ = 0;
    double constant_;
    std::vector<double> linear_;
    Mat quad_;
    double quad_trace_ = 0.0;
    bool has_quad_ = false;
    std::vector<Entry> higher_;
};

double evaluate(const ChaosElement& F, const Vec& xi);

ChaosElement multiply(const ChaosElement& F, const ChaosElement& G, int max_order = 4);

// <D F_new, -D L^{-1} G_prev>; F_new must be a pure single integral.
ChaosElement gamma_step(const ChaosElement& G_prev, const ChaosElement& F_new);
// Same rule extended linearly to any F_new (constants of both drop out).
ChaosElement gamma_step_general(const ChaosElement& G_prev, const ChaosElement& F_new);
// Only the order-0 part of gamma_step_general.
double gamma_step_constant(const ChaosElement& G_prev, const ChaosElement& F_new);
// Gamma_{l1,...,lk}(F): left fold starting from F_{l1}
ChaosElement gamma_fold(const ChaosVector& F, const std::vector<int>& labels);

// Gamma_ij(F) = q_i <I_{q_i-1}(f_i), I_{q_j-1}(f_j)> = gamma_step(F_j, F_i)
ChaosElement gamma_ij(const ChaosVector& F, int i, int j);
double var_gamma(const ChaosVector& F, int i, int j);

struct DiscrepancyReport {
    Mat var_gamma;
    Mat covariance;
    double delta_gamma = 0, delta_c = 0, phi = 0;
};
DiscrepancyReport discrepancy(const ChaosVector& F, const GaussianSpec& C);
Mat chaos_covariance(const ChaosVector& F);

// Permutation-sum cumulant. The first label is held fixed.
double joint_cumulant(const ChaosVector& F, const MultiIndex& alpha);
double joint_cumulant_labels(const ChaosVector& F, const std::vector<int>& labels);
// all components I_2(f_i): 2^{n-1} sum_sigma <(..(f_{i1} ~x_1 f_{s2}) ..) ~x_1 f_{s(n-1)}, f_{sn}>
double cumulant_second_chaos(const ChaosVector& F, const std::vector<int>& labels);
double cumulant_second_chaos(const ChaosVector& F, const MultiIndex& alpha);

struct ThirdPairing {
    bool admissible = false;
    int r = 0;
    double value = 0.0;  // <f_i ~x_r f_j, f_k>
};
ThirdPairing third_cumulant_pairing(const ChaosVector& F, int i, int j, int k);

struct FourthMomentRow {
    int component = 0;
    double kappa4 = 0;
    std::vector<double> contraction_norms;  // ||f (x)_r f||, r = 1..q-1
    double var_gamma = 0;
};
std::vector<std::vector<FourthMomentRow>> fourth_moment_diagnostics(const std::vector<ChaosVector>& seq);

struct RhoResult {
    double rho = 0;            // E[Gamma_ijk] / sqrt(Var Gamma_ij)
    double expectation = 0;    // E[Gamma_ijk]
    double cumulant_ratio = 0; // kappa_{e_i+e_j+e_k} / sqrt(Var Gamma_ij)
};
// Throws std::domain_error when Var Gamma_ij vanishes.
RhoResult rho_constants(const ChaosVector& F, int i, int j, int k);

}  // namespace chaoslab
