#pragma once

#include <vector>

#include "chaoslab/chaos.hpp"
#include "chaoslab/edgeworth.hpp"
#include "chaoslab/mc.hpp"

namespace chaoslab {

// Normalized exploding sheet functionals, one component per epsilon.
struct SheetSpec {
    int l = 1;
    std::vector<double> epsilons;
    void validate() const;
};

// prod_{j<k} (1 + e_1 + ... + e_j)^{-1} averaged over all orderings of the arguments
double sheet_ctilde(const std::vector<double>& eps);

enum class SheetMode {
    Closed,      // c~ k! / sum(eps); exact for k <= 3, otherwise routed to Simplex
    Simplex,     // exact sum over orderings of the unit cube, any k
    Quadrature,  // nested adaptive quadrature of the cyclic-min integral, k <= 3
};

// C(e_1..e_k) = int_{[0,1]^k} prod_cyc (s_i ^ s_{i+1}) / prod s_i^{2-e_i} ds
double sheet_constant(const std::vector<double>& eps, SheetMode mode = SheetMode::Closed);

// kappa_alpha(F~): 2^{n-1} sum over orderings with the first label fixed of C(...)^l,
// times prod C_2(e)^{-l/2}. Equals (n-1)! 2^{n-1} C^l prod C_2^{-l/2} whenever C does not depend on the order.
double sheet_cumulant(const SheetSpec& spec, const MultiIndex& alpha);
// correlation of components i, j
double sheet_correlation(const SheetSpec& spec, int i, int j);

// The functional on a grid: t = e^{-u}, W(t) = sqrt(t) X_u with X stationary OU
// (cov e^{-|u-v|/2}); F_e = int_0^inf X_u^2 e^{-e u} du, truncated at U and sampled at step h.
struct SheetGrid {
    double h = 0.5;
    double horizon_factor = 25.0;  // U = factor / min eps
    int max_points = 4096;         // per axis
};

struct SheetDiscrete {
    SheetSpec spec;
    int K = 0;     // points per axis
    double h = 0;
    double r = 0;  // AR(1) coefficient e^{-h/2}
    std::vector<Vec> weights;  // per component, 1D weights h e^{-e u_k}
    Vec sigma;                 // standard deviation of the unnormalized component
    CumulantSet cumulants;     // exact, orders 2 and 3 (normalized components)
    Mat var_gamma;             // Var Gamma_ij of the normalized vector
};
SheetDiscrete sheet_discretize(const SheetSpec& spec, const SheetGrid& grid = {});

// Explicit second-chaos kernels in white-noise coordinates (l = 1 only, small K).
ChaosVector sheet_kernels(const SheetDiscrete& sd);

struct SheetResult {
    RateRow row;
    double ratio = 0, ratio_se = 0;   // (E g - E_3) / sqrt(sum eps^l)
    double mean_g = 0, e3 = 0, egz = 0;
    CumulantSet cumulants;
    Mat covariance;
};
SheetResult sheet_experiment(const SheetSpec& spec, const TestFunction& g, const MCConfig& mc,
                             const SheetGrid& grid = {});

struct SheetReport {
    RateTable table;
    std::vector<double> scales;
    std::vector<SheetResult> results;  // same order as scales
};
// epsilons = scale * shape for each scale; scale i uses seed splitmix64(mc.seed + i).
SheetReport sheet_rates(int l, const std::vector<double>& shape, const std::vector<double>& scales,
                        const TestFunction& g, const MCConfig& mc, const SheetGrid& grid = {});

}  // namespace chaoslab
