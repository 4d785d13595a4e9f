#pragma once

#include <vector>

#include "chaoslab/chaos.hpp"
#include "chaoslab/edgeworth.hpp"
#include "chaoslab/mc.hpp"

namespace chaoslab {

struct BreuerMajorSpec {
    double H = 0.3;
    std::vector<int> orders{2};
    int T = 64;
    double step = 1.0;  // increments of length step; by self-similarity only T/step matters
    void validate() const;
    int points() const;  // number of increments
};

// covariance of unit fBm increments at lag t
double breuer_rho(double H, double t);

struct BreuerBuild {
    ChaosVector F;
    GramBasis basis;
};
BreuerBuild breuer_build(const BreuerMajorSpec& spec);

// delta_{q_i q_j} (q_i!/n) sum_{u,v} rho^{q_i}(u-v), by direct summation
Mat breuer_covariance(const BreuerMajorSpec& spec);
// limit as T -> inf: delta_{q_i q_j} q_i! sum_{k in Z} rho^{q_i}(k)
Mat breuer_limit_covariance(const BreuerMajorSpec& spec);

// F_i = n^{-1/2} sum_u He_{q_i}(X_u), X = L xi with L the Gram factor
void breuer_pathwise(const BreuerMajorSpec& spec, const Mat& L, const double* xi, double* out);

struct BreuerScale {
    int T = 0;
    Mat covariance, limit;
    double delta_gamma = 0, delta_c = 0, phi = 0;
    CumulantSet cumulants;  // exact, orders 1..3
    double egz = 0, e3 = 0;
    Estimate mean_g;
};
struct BreuerReport {
    RateTable table;
    std::vector<BreuerScale> scales;
};
// One row per horizon; MC skipped when mc.samples == 0 (gaps are then NaN).
BreuerReport breuer_experiment(const BreuerMajorSpec& spec, const std::vector<int>& horizons, const TestFunction& g,
                               const MCConfig& mc);

}  // namespace chaoslab
